//! Sampling (de Rham) maps and cell-center reconstruction.
//!
//! Sampling uses the midpoint rule per entity, so constant fields are
//! represented exactly and smooth fields to second order in h.

use super::{entity_offset_mask, Cochain, ComplexId, GridSpec};
use crate::error::{CoreError, Result};
use rayon::prelude::*;

/// Samples a scalar field as a degree-0 or degree-3 cochain.
pub fn de_rham_scalar(grid: GridSpec, complex: ComplexId, degree: usize, f: impl Fn([f64; 3]) -> f64 + Sync) -> Cochain {
    assert!(degree == 0 || degree == 3, "scalar sampling is for degrees 0 and 3");
    let mut out = Cochain::zero(grid, complex, degree);
    let n = grid.n;
    let measure = grid.entity_measure(degree, 0);
    out.values.par_iter_mut().enumerate().for_each(|(s, v)| {
        let (i, j, k) = (s % n[0], (s / n[0]) % n[1], s / (n[0] * n[1]));
        *v = f(grid.entity_center(complex, degree, 0, i, j, k)) * measure;
    });
    out
}

/// Samples a 1- or 2-form given by its coordinate components (2-form
/// components in the (23, 31, 12) basis order).
pub fn de_rham_vector(grid: GridSpec, complex: ComplexId, degree: usize, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Cochain {
    assert!(degree == 1 || degree == 2, "vector sampling is for degrees 1 and 2");
    let mut out = Cochain::zero(grid, complex, degree);
    let n = grid.n;
    let sites = grid.num_sites();
    out.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let comp = idx / sites;
        let s = idx % sites;
        let (i, j, k) = (s % n[0], (s / n[0]) % n[1], s / (n[0] * n[1]));
        let x = grid.entity_center(complex, degree, comp, i, j, k);
        *v = f(x)[comp] * grid.entity_measure(degree, comp);
    });
    out
}

/// Axes along which an entity of the given kind is displaced from the
/// primal cell center; averaging over index shifts {0, 1} on these axes
/// lands exactly on the cell center.
fn averaging_axes(complex: ComplexId, degree: usize, comp: usize) -> Vec<usize> {
    let mask = entity_offset_mask(complex, degree, comp);
    (0..3).filter(|&a| !mask[a]).collect()
}

/// For every site s, sums `src` over the 2^|axes| sites reached by shifting
/// s by `step` (±1, periodic) along each subset of `axes`, and hands the sum
/// to `sink(s, sum)`. Division-free: neighbor coordinates come from small
/// wrap tables, and the row offsets for all subsets are hoisted out of the
/// innermost loop. This is the inner kernel of every stencil gather/scatter
/// in the crate and runs inside Newton–CG, so it has to be cheap.
pub(crate) fn subset_shift_sum(
    n: [usize; 3],
    axes: &[usize],
    step: i8,
    src: impl Fn(usize) -> f64,
    mut sink: impl FnMut(usize, f64),
) {
    debug_assert!(axes.len() <= 3);
    let masks: Vec<[usize; 3]> = (0..(1usize << axes.len()))
        .map(|bits| {
            let mut m = [0usize; 3];
            for (pos, &a) in axes.iter().enumerate() {
                if bits & (1 << pos) != 0 {
                    m[a] = 1;
                }
            }
            m
        })
        .collect();
    let wrap = |len: usize| -> Vec<usize> {
        (0..len)
            .map(|x| {
                if step > 0 {
                    if x + 1 == len { 0 } else { x + 1 }
                } else if x == 0 {
                    len - 1
                } else {
                    x - 1
                }
            })
            .collect()
    };
    let (sh0, sh1, sh2) = (wrap(n[0]), wrap(n[1]), wrap(n[2]));
    let mut rows = vec![0usize; masks.len()];
    for k in 0..n[2] {
        let kk = [k, sh2[k]];
        for j in 0..n[1] {
            let jj = [j, sh1[j]];
            for (r, m) in rows.iter_mut().zip(&masks) {
                *r = n[0] * (jj[m[1]] + n[1] * kk[m[2]]);
            }
            let base = n[0] * (j + n[1] * k);
            for i in 0..n[0] {
                let ii = [i, sh0[i]];
                let mut acc = 0.0;
                for (r, m) in rows.iter().zip(&masks) {
                    acc += src(ii[m[0]] + r);
                }
                sink(base + i, acc);
            }
        }
    }
}

/// Averages the component values of each primal cell's surrounding entities
/// and divides by the entity measure, yielding per-cell samples of the
/// form's coordinate components. Exact for constant fields, second-order
/// accurate (midpoint symmetry) otherwise.
pub fn reconstruct_at_centers(c: &Cochain) -> Result<Vec<[f64; 3]>> {
    if c.degree != 1 && c.degree != 2 {
        return Err(CoreError::CochainMismatch("reconstruction needs a degree 1 or 2 cochain".into()));
    }
    let grid = c.grid;
    let sites = grid.num_sites();
    let mut out = vec![[0.0f64; 3]; sites];
    for comp in 0..3 {
        let axes = averaging_axes(c.complex, c.degree, comp);
        let w = 1.0 / ((1usize << axes.len()) as f64 * grid.entity_measure(c.degree, comp));
        let block = &c.values[comp * sites..(comp + 1) * sites];
        subset_shift_sum(grid.n, &axes, 1, |t| block[t], |s, acc| out[s][comp] = acc * w);
    }
    Ok(out)
}

/// Transpose of [`reconstruct_at_centers`]: distributes per-cell component
/// weights back onto entities. Together with the reconstruction this is the
/// pair `(R, Rᵀ)` that makes cell-collocated functionals exactly
/// differentiable with respect to cochain coefficients.
pub fn scatter_from_centers(grid: GridSpec, complex: ComplexId, degree: usize, cells: &[[f64; 3]]) -> Cochain {
    assert!(degree == 1 || degree == 2);
    assert_eq!(cells.len(), grid.num_sites());
    let sites = grid.num_sites();
    let mut out = Cochain::zero(grid, complex, degree);
    for comp in 0..3 {
        let axes = averaging_axes(complex, degree, comp);
        let w = 1.0 / ((1usize << axes.len()) as f64 * grid.entity_measure(degree, comp));
        let block = &mut out.values[comp * sites..(comp + 1) * sites];
        subset_shift_sum(grid.n, &axes, -1, |t| cells[t][comp], |s, acc| block[s] = acc * w);
    }
    out
}
