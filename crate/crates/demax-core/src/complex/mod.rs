//! The discrete double de Rham complex on a periodic 3-D Cartesian grid.
//!
//! Primal k-cochains live on nodes/edges/faces/cells; the dual complex is
//! offset by half a cell per axis so that every dual (3−k)-entity coincides
//! geometrically with exactly one primal k-entity. That makes the Poincaré
//! pairing a plain coefficient dot product and keeps everything in this
//! module strictly metric-free.
//!
//! Cochain values store *integrals* of the underlying form over grid
//! entities, so the exterior derivative is an exact signed sum of entity
//! values (an incidence operator with entries in {−1, 0, +1}).

mod derham;
mod incidence;

pub use derham::{de_rham_scalar, de_rham_vector, reconstruct_at_centers, scatter_from_centers};
pub(crate) use derham::subset_shift_sum;
pub use incidence::{DoubleComplex, IncidenceOperator};

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Which of the two complexes a cochain lives on. Primal cochains
/// represent straight forms, dual cochains twisted forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComplexId {
    Primal,
    Dual,
}

impl ComplexId {
    pub fn other(self) -> Self {
        match self {
            ComplexId::Primal => ComplexId::Dual,
            ComplexId::Dual => ComplexId::Primal,
        }
    }
}

/// A periodic Cartesian grid: `n[a]` cells and spacing `h[a]` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub h: [f64; 3],
}

impl GridSpec {
    pub fn new(n: [usize; 3], h: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if n[a] < 2 {
                return Err(CoreError::InvalidGrid(format!("n_i >= 2 required, got n[{a}] = {}", n[a])));
            }
            if !(h[a] > 0.0) || !h[a].is_finite() {
                return Err(CoreError::InvalidGrid(format!("h[{a}] must be positive, got {}", h[a])));
            }
        }
        Ok(Self { n, h })
    }

    /// Number of nodes (= cells) of the grid.
    pub fn num_sites(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.n[0] as f64 * self.h[0], self.n[1] as f64 * self.h[1], self.n[2] as f64 * self.h[2]]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// Component blocks per entity degree (1 for scalar-like, 3 for edges/faces).
    pub fn num_components(degree: usize) -> usize {
        match degree {
            0 | 3 => 1,
            1 | 2 => 3,
            _ => panic!("degree out of range"),
        }
    }

    pub fn entity_count(&self, degree: usize) -> usize {
        Self::num_components(degree) * self.num_sites()
    }

    #[inline]
    pub fn site(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, by: isize) -> usize {
        let n = [self.n[0] as isize, self.n[1] as isize, self.n[2] as isize];
        let i = (idx % self.n[0]) as isize;
        let j = ((idx / self.n[0]) % self.n[1]) as isize;
        let k = (idx / (self.n[0] * self.n[1])) as isize;
        let mut c = [i, j, k];
        c[axis] = (c[axis] + by).rem_euclid(n[axis]);
        c[0] as usize + self.n[0] * (c[1] as usize + self.n[1] * c[2] as usize)
    }

    /// Coordinates of the center of a grid entity.
    pub fn entity_center(&self, complex: ComplexId, degree: usize, comp: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
        let mask = entity_offset_mask(complex, degree, comp);
        let idx = [i as f64, j as f64, k as f64];
        let mut x = [0.0; 3];
        for a in 0..3 {
            x[a] = (idx[a] + if mask[a] { 0.5 } else { 0.0 }) * self.h[a];
        }
        x
    }

    /// Measure (length/area/volume) of an entity; 1 for degree 0.
    pub fn entity_measure(&self, degree: usize, comp: usize) -> f64 {
        let (b, c) = ((comp + 1) % 3, (comp + 2) % 3);
        match degree {
            0 => 1.0,
            1 => self.h[comp],
            2 => self.h[b] * self.h[c],
            3 => self.cell_volume(),
            _ => panic!("degree out of range"),
        }
    }
}

/// Axes along which an entity's center sits at half-integer coordinates.
pub(crate) fn entity_offset_mask(complex: ComplexId, degree: usize, comp: usize) -> [bool; 3] {
    let (b, c) = ((comp + 1) % 3, (comp + 2) % 3);
    let mut mask = [false; 3];
    match degree {
        0 => {}
        1 => mask[comp] = true,
        2 => {
            mask[b] = true;
            mask[c] = true;
        }
        3 => mask = [true; 3],
        _ => panic!("degree out of range"),
    }
    if complex == ComplexId::Dual {
        for m in &mut mask {
            *m = !*m;
        }
    }
    mask
}

/// Degree-k field data on one of the two complexes. Values are stored
/// axis-major: for degrees 1 and 2 the x-, y-, z-component blocks are
/// concatenated, each block in `i + nx*(j + ny*k)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub grid: GridSpec,
    pub complex: ComplexId,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zero(grid: GridSpec, complex: ComplexId, degree: usize) -> Self {
        Self { grid, complex, degree, values: vec![0.0; grid.entity_count(degree)] }
    }

    pub fn from_values(grid: GridSpec, complex: ComplexId, degree: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.entity_count(degree) {
            return Err(CoreError::CochainMismatch(format!(
                "expected {} values for degree {degree}, got {}",
                grid.entity_count(degree),
                values.len()
            )));
        }
        Ok(Self { grid, complex, degree, values })
    }

    pub fn same_space(&self, other: &Cochain) -> bool {
        self.grid == other.grid && self.complex == other.complex && self.degree == other.degree
    }

    /// Index into `values` for component block `comp`, site `(i, j, k)`.
    #[inline]
    pub fn at(&self, comp: usize, site: usize) -> usize {
        comp * self.grid.num_sites() + site
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Cochain {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Cochain) {
        debug_assert!(self.same_space(other));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn dot(&self, other: &Cochain) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Periodic shift of the stored values by whole grid sites.
    pub fn translated(&self, by: [isize; 3]) -> Cochain {
        let mut out = Cochain::zero(self.grid, self.complex, self.degree);
        let ncomp = GridSpec::num_components(self.degree);
        let sites = self.grid.num_sites();
        for comp in 0..ncomp {
            for s in 0..sites {
                let mut t = s;
                for a in 0..3 {
                    t = self.grid.shift(t, a, by[a]);
                }
                out.values[comp * sites + t] = self.values[comp * sites + s];
            }
        }
        out
    }
}

/// The discrete Poincaré duality pairing: a plain dot product between a
/// primal k-cochain and a dual (3−k)-cochain (each dual entity is the
/// geometric dual of exactly one primal entity).
pub fn pairing(a: &Cochain, b: &Cochain) -> Result<f64> {
    if a.grid != b.grid {
        return Err(CoreError::CochainMismatch("pairing: grids differ".into()));
    }
    if a.complex == b.complex {
        return Err(CoreError::CochainMismatch("pairing: needs one primal and one dual cochain".into()));
    }
    if a.degree + b.degree != 3 {
        return Err(CoreError::CochainMismatch(format!(
            "pairing: degrees {} and {} are not complementary",
            a.degree, b.degree
        )));
    }
    Ok(a.dot(b))
}

#[cfg(test)]
mod tests;
