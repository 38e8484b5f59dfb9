//! Signed incidence operators: the discrete exterior derivative.

use super::{Cochain, ComplexId, GridSpec};
use crate::error::{CoreError, Result};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// A sparse operator with entries in {−1, 0, +1} realizing the exterior
/// derivative between cochain spaces. Purely topological: no grid spacing
/// or metric ever enters.
#[derive(Debug, Clone)]
pub struct IncidenceOperator {
    pub source: (ComplexId, usize),
    pub target: (ComplexId, usize),
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    sign: Vec<i8>,
}

impl IncidenceOperator {
    fn from_rows(
        source: (ComplexId, usize),
        target: (ComplexId, usize),
        cols: usize,
        rows: Vec<Vec<(usize, i8)>>,
    ) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut sign = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, s) in r {
                debug_assert!(c < cols);
                col_idx.push(c as u32);
                sign.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self { source, target, rows: nrows, cols, row_ptr, col_idx, sign }
    }

    pub fn entries(&self, row: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].iter().zip(&self.sign[lo..hi]).map(|(c, s)| (*c as usize, *s))
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Applies the operator to a cochain of matching complex and degree.
    pub fn apply(&self, c: &Cochain) -> Result<Cochain> {
        if (c.complex, c.degree) != self.source {
            return Err(CoreError::CochainMismatch(format!(
                "operator source {:?} does not match cochain ({:?}, {})",
                self.source, c.complex, c.degree
            )));
        }
        if c.values.len() != self.cols {
            return Err(CoreError::CochainMismatch("operator size does not match grid".into()));
        }
        let mut out = Cochain::zero(c.grid, self.target.0, self.target.1);
        out.values.par_iter_mut().enumerate().for_each(|(r, v)| {
            let mut acc = 0.0;
            for (col, s) in self.entries(r) {
                acc += s as f64 * c.values[col];
            }
            *v = acc;
        });
        Ok(out)
    }

    pub fn transpose(&self) -> IncidenceOperator {
        let mut rows: Vec<Vec<(usize, i8)>> = vec![Vec::new(); self.cols];
        for r in 0..self.rows {
            for (c, s) in self.entries(r) {
                rows[c].push((r, s));
            }
        }
        // source/target bookkeeping is the caller's business for raw transposes
        IncidenceOperator::from_rows(self.target, self.source, self.rows, rows)
    }

    fn negated(mut self) -> IncidenceOperator {
        for s in &mut self.sign {
            *s = -*s;
        }
        self
    }

    fn with_spaces(mut self, source: (ComplexId, usize), target: (ComplexId, usize)) -> IncidenceOperator {
        self.source = source;
        self.target = target;
        self
    }

    /// Integer sparse product `self ∘ other`; used to verify d∘d = 0 exactly.
    pub fn compose(&self, other: &IncidenceOperator) -> Vec<BTreeMap<usize, i64>> {
        assert_eq!(self.cols, other.rows, "composition shape mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for (mid, s1) in self.entries(r) {
                    for (c, s2) in other.entries(mid) {
                        let e = acc.entry(c).or_insert(0);
                        *e += (s1 as i64) * (s2 as i64);
                        if *e == 0 {
                            acc.remove(&c);
                        }
                    }
                }
                acc
            })
            .collect()
    }

    pub fn compose_is_zero(&self, other: &IncidenceOperator) -> bool {
        self.compose(other).iter().all(|row| row.is_empty())
    }
}

/// The full family of exterior derivatives on both complexes.
///
/// Dual derivatives are signed transposes of the primal ones,
/// `d̃_{2−k} = (−1)^{3−k} d_kᵀ`, which makes the discrete Stokes identity
/// `⟨d_k a, b̃⟩ = (−1)^{3−k} ⟨a, d̃_{2−k} b̃⟩` hold exactly by construction
/// (periodic boundaries leave no trace term).
#[derive(Debug, Clone)]
pub struct DoubleComplex {
    pub grid: GridSpec,
    primal: [IncidenceOperator; 3],
    dual: [IncidenceOperator; 3],
}

impl DoubleComplex {
    pub fn build(grid: GridSpec) -> Self {
        let d0 = build_d0(&grid);
        let d1 = build_d1(&grid);
        let d2 = build_d2(&grid);
        let dual0 = d2
            .transpose()
            .negated()
            .with_spaces((ComplexId::Dual, 0), (ComplexId::Dual, 1));
        let dual1 = d1.transpose().with_spaces((ComplexId::Dual, 1), (ComplexId::Dual, 2));
        let dual2 = d0
            .transpose()
            .negated()
            .with_spaces((ComplexId::Dual, 2), (ComplexId::Dual, 3));
        Self { grid, primal: [d0, d1, d2], dual: [dual0, dual1, dual2] }
    }

    /// Primal exterior derivative `d_k`.
    pub fn d(&self, k: usize) -> &IncidenceOperator {
        &self.primal[k]
    }

    /// Dual exterior derivative `d̃_k`.
    pub fn dual_d(&self, k: usize) -> &IncidenceOperator {
        &self.dual[k]
    }

    /// Applies the exterior derivative matching the cochain's complex/degree.
    pub fn apply_d(&self, c: &Cochain) -> Result<Cochain> {
        if c.degree > 2 {
            return Err(CoreError::CochainMismatch("no exterior derivative above degree 2".into()));
        }
        match c.complex {
            ComplexId::Primal => self.primal[c.degree].apply(c),
            ComplexId::Dual => self.dual[c.degree].apply(c),
        }
    }
}

fn build_d0(grid: &GridSpec) -> IncidenceOperator {
    let sites = grid.num_sites();
    let mut rows = vec![Vec::new(); 3 * sites];
    for a in 0..3 {
        for s in 0..sites {
            let head = grid.shift(s, a, 1);
            rows[a * sites + s] = vec![(s, -1i8), (head, 1i8)];
        }
    }
    IncidenceOperator::from_rows((ComplexId::Primal, 0), (ComplexId::Primal, 1), sites, rows)
}

fn build_d1(grid: &GridSpec) -> IncidenceOperator {
    let sites = grid.num_sites();
    let mut rows = vec![Vec::new(); 3 * sites];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for s in 0..sites {
            // circulation around the face with normal `a`
            rows[a * sites + s] = vec![
                (b * sites + s, 1i8),
                (c * sites + grid.shift(s, b, 1), 1i8),
                (b * sites + grid.shift(s, c, 1), -1i8),
                (c * sites + s, -1i8),
            ];
        }
    }
    IncidenceOperator::from_rows((ComplexId::Primal, 1), (ComplexId::Primal, 2), 3 * sites, rows)
}

fn build_d2(grid: &GridSpec) -> IncidenceOperator {
    let sites = grid.num_sites();
    let mut rows = vec![Vec::new(); sites];
    for s in 0..sites {
        let mut entries = Vec::with_capacity(6);
        for a in 0..3 {
            entries.push((a * sites + grid.shift(s, a, 1), 1i8));
            entries.push((a * sites + s, -1i8));
        }
        rows[s] = entries;
    }
    IncidenceOperator::from_rows((ComplexId::Primal, 2), (ComplexId::Primal, 3), 3 * sites, rows)
}
