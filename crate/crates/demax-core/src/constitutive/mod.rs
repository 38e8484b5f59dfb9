//! Matter models K[e¹, b²] and the constitutive maps they induce.
//!
//! Everything here follows a discrete-first variational principle: the
//! functional K is defined directly on cochain coefficients (reconstructing
//! to cell centers or staying at entities, then applying the pointwise
//! density), and the polarization/magnetization are its *exact* coefficient
//! gradients. Because the discrete Poincaré pairing is a plain dot product,
//! the coefficient gradient is precisely the twisted functional derivative,
//! and all Hamiltonian identities downstream hold to solver tolerance
//! rather than discretization order.

mod spectral;

use crate::complex::{
    reconstruct_at_centers, scatter_from_centers, subset_shift_sum, Cochain, ComplexId,
    DoubleComplex, GridSpec,
};
use crate::error::{CoreError, Result};
use crate::metric_ops::{HodgeSuite, MaterialMetric};
use serde::{Deserialize, Serialize};
use spectral::SpectralInverse;

/// Unit-system constants: Gaussian units with c and 4π kept explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub c: f64,
    pub fourpi: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { c: 1.0, fourpi: 4.0 * std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// K = 0.
    Vacuum,
    /// K = −∫ (χ₁/2)|E|² + (χ₃/4)|E|⁴ vol (intensity-dependent index).
    Kerr { chi1: f64, chi3: f64 },
    /// K = −(1/8π)[(α−1)‖e‖² + β(‖d*e‖² + ‖de‖²)], so that
    /// d̃ = ⋆₁(α + βΔ_h)e: α is the static permittivity (α = 1, β = 0 is
    /// vacuum) and plane waves obey ω(k) = √(c²k²/(α + βk²)).
    NonlocalDispersive { alpha: f64, beta: f64 },
    /// K = −(α/2)∫ |E|²|B|² vol (polarization depends on B).
    Magnetoelectric { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: ModelVariant,
    pub units: Units,
}

impl ModelSpec {
    pub fn new(variant: ModelVariant, units: Units) -> Result<Self> {
        let spec = Self { variant, units };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid-independent invariants (the dispersive positivity check needs a
    /// grid and happens in [`Constitutive::new`]).
    pub fn validate(&self) -> Result<()> {
        if !(self.units.c > 0.0) || !(self.units.fourpi > 0.0) {
            return Err(CoreError::InvalidModel("units constants must be positive".into()));
        }
        match self.variant {
            ModelVariant::Vacuum => {}
            ModelVariant::Kerr { chi1, chi3 } => {
                if !(1.0 + self.units.fourpi * chi1 > 0.0) {
                    return Err(CoreError::InvalidModel(format!(
                        "Kerr requires 1 + 4π·chi1 > 0, got chi1 = {chi1}"
                    )));
                }
                if !(chi3 >= 0.0) {
                    return Err(CoreError::InvalidModel(format!(
                        "Kerr requires chi3 >= 0, got {chi3}"
                    )));
                }
            }
            ModelVariant::NonlocalDispersive { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(CoreError::InvalidModel("dispersive parameters must be finite".into()));
                }
            }
            ModelVariant::Magnetoelectric { alpha } => {
                if !(alpha >= 0.0) {
                    return Err(CoreError::InvalidModel(format!(
                        "Magnetoelectric requires alpha >= 0, got {alpha}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Linear media admit the explicit splitting / single-complex backends.
    pub fn is_linear(&self) -> bool {
        matches!(self.variant, ModelVariant::Vacuum | ModelVariant::NonlocalDispersive { .. })
    }
}

/// Field pair in the (e¹, b²) representation.
#[derive(Debug, Clone)]
pub struct EBState {
    pub e: Cochain,
    pub b: Cochain,
}

/// Field pair in the evolving (d̃², b²) representation.
#[derive(Debug, Clone)]
pub struct DBState {
    pub dtilde: Cochain,
    pub b: Cochain,
}

/// Which second partial derivative of K to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianSlot {
    /// ∂(dk_de)/∂e · v, v a primal 1-cochain.
    Ee,
    /// ∂(dk_de)/∂b · v, v a primal 2-cochain.
    Be,
    /// ∂(dk_db)/∂e · v, v a primal 1-cochain.
    Eb,
}

/// A matter model bound to a grid and metric: evaluation, exact gradients,
/// Hessian actions, the constitutive maps (e,b) → (d̃,h̃), and the implicit
/// inverse (d̃,b) → e.
#[derive(Debug)]
pub struct Constitutive {
    grid: GridSpec,
    metric: MaterialMetric,
    model: ModelSpec,
    ops: DoubleComplex,
    stars: HodgeSuite,
    spectral: Option<SpectralInverse>,
}

impl Constitutive {
    pub fn new(grid: GridSpec, metric: MaterialMetric, model: ModelSpec) -> Result<Self> {
        model.validate()?;
        let ops = DoubleComplex::build(grid);
        let stars = HodgeSuite::build(grid, metric);
        let spectral = match model.variant {
            ModelVariant::NonlocalDispersive { alpha, beta } => {
                Some(SpectralInverse::build(grid, &stars, alpha, beta)?)
            }
            _ => None,
        };
        Ok(Self { grid, metric, model, ops, stars, spectral })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn metric(&self) -> &MaterialMetric {
        &self.metric
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn ops(&self) -> &DoubleComplex {
        &self.ops
    }

    pub fn stars(&self) -> &HodgeSuite {
        &self.stars
    }

    fn check_eb(&self, s: &EBState) -> Result<()> {
        if s.e.grid != self.grid
            || s.b.grid != self.grid
            || (s.e.complex, s.e.degree) != (ComplexId::Primal, 1)
            || (s.b.complex, s.b.degree) != (ComplexId::Primal, 2)
        {
            return Err(CoreError::CochainMismatch("EB state must be (primal 1, primal 2) on the model grid".into()));
        }
        Ok(())
    }

    fn check_db(&self, s: &DBState) -> Result<()> {
        if s.dtilde.grid != self.grid
            || s.b.grid != self.grid
            || (s.dtilde.complex, s.dtilde.degree) != (ComplexId::Dual, 2)
            || (s.b.complex, s.b.degree) != (ComplexId::Primal, 2)
        {
            return Err(CoreError::CochainMismatch("DB state must be (dual 2, primal 2) on the model grid".into()));
        }
        Ok(())
    }

    /// Pointwise |E|²_g = Σ_a E_a²/g_a at cell centers.
    fn rho_e2(&self, cells: &[[f64; 3]]) -> Vec<f64> {
        let g = self.metric.diag();
        cells
            .iter()
            .map(|e| e[0] * e[0] / g[0] + e[1] * e[1] / g[1] + e[2] * e[2] / g[2])
            .collect()
    }

    /// Pointwise |B|²_g = Σ_a g_a p_a²/det g at cell centers (p_a are the
    /// coordinate components of the flux 2-form, B^a = p_a/√det g).
    fn rho_b2(&self, cells: &[[f64; 3]]) -> Vec<f64> {
        let g = self.metric.diag();
        let det = g[0] * g[1] * g[2];
        cells
            .iter()
            .map(|p| (g[0] * p[0] * p[0] + g[1] * p[1] * p[1] + g[2] * p[2] * p[2]) / det)
            .collect()
    }

    /// Averages a per-cell scalar onto edges: edge of component `a` at site
    /// s touches the four cells at index shifts {0,−1}×{0,−1} on the two
    /// transverse axes.
    fn cells_to_edges(&self, cells: &[f64]) -> Vec<f64> {
        let sites = self.grid.num_sites();
        let mut out = vec![0.0; 3 * sites];
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let block = &mut out[a * sites..(a + 1) * sites];
            subset_shift_sum(self.grid.n, &[b, c], -1, |t| cells[t], |s, acc| {
                block[s] = 0.25 * acc;
            });
        }
        out
    }

    /// Transpose of [`cells_to_edges`]: accumulates per-edge scalars back
    /// onto their four adjacent cells.
    fn edges_to_cells(&self, edges: &[f64]) -> Vec<f64> {
        let sites = self.grid.num_sites();
        let mut out = vec![0.0; sites];
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let block = &edges[a * sites..(a + 1) * sites];
            subset_shift_sum(self.grid.n, &[b, c], 1, |t| block[t], |s, acc| {
                out[s] += 0.25 * acc;
            });
        }
        out
    }

    fn rewrap(&self, mut c: Cochain, complex: ComplexId, degree: usize) -> Cochain {
        c.complex = complex;
        c.degree = degree;
        c
    }

    /// The discrete matter functional K[e, b].
    pub fn k_eval(&self, s: &EBState) -> Result<f64> {
        self.check_eb(s)?;
        let vol = self.grid.cell_volume();
        let sd = self.metric.sqrt_det();
        match self.model.variant {
            ModelVariant::Vacuum => Ok(0.0),
            ModelVariant::Kerr { chi1, chi3 } => {
                let rho2 = self.rho_e2(&reconstruct_at_centers(&s.e)?);
                let sum: f64 = rho2.iter().map(|&r| 0.5 * chi1 * r + 0.25 * chi3 * r * r).sum();
                Ok(-sd * vol * sum)
            }
            ModelVariant::NonlocalDispersive { alpha, beta } => {
                let fp = self.model.units.fourpi;
                let de = self.ops.d(1).apply(&s.e)?;
                let dse = self.stars.codifferential(&self.ops, &s.e)?;
                let k = (alpha - 1.0) * self.stars.l2(&s.e, &s.e)?
                    + beta * (self.stars.l2(&dse, &dse)? + self.stars.l2(&de, &de)?);
                Ok(-0.5 * k / fp)
            }
            ModelVariant::Magnetoelectric { alpha } => {
                // per-edge quadrature for the E factor (see dk_de): this is
                // what makes the constitutive inverse a pointwise division
                let sbar = self.cells_to_edges(&self.rho_b2(&reconstruct_at_centers(&s.b)?));
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut k = 0.0;
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        // ⋆₁ coefficient = √det g · vol / (g_a h_a²), exactly
                        // the per-edge quadrature weight of E_a²/g_a
                        k += s1[a] * s.e.values[idx] * s.e.values[idx] * sbar[idx];
                    }
                }
                Ok(-0.5 * alpha * k)
            }
        }
    }

    /// Exact gradient of K with respect to the coefficients of e — a dual
    /// 2-cochain; the discrete polarization is p̃² = −dk_de.
    pub fn dk_de(&self, s: &EBState) -> Result<Cochain> {
        self.check_eb(s)?;
        let vol = self.grid.cell_volume();
        let sd = self.metric.sqrt_det();
        let g = self.metric.diag();
        match self.model.variant {
            ModelVariant::Vacuum => Ok(Cochain::zero(self.grid, ComplexId::Dual, 2)),
            ModelVariant::Kerr { chi1, chi3 } => {
                let cells = reconstruct_at_centers(&s.e)?;
                let rho2 = self.rho_e2(&cells);
                let w: Vec<[f64; 3]> = cells
                    .iter()
                    .zip(&rho2)
                    .map(|(e, &r)| {
                        let f = -sd * vol * (chi1 + chi3 * r);
                        [f * e[0] / g[0], f * e[1] / g[1], f * e[2] / g[2]]
                    })
                    .collect();
                let grad = scatter_from_centers(self.grid, ComplexId::Primal, 1, &w);
                Ok(self.rewrap(grad, ComplexId::Dual, 2))
            }
            ModelVariant::NonlocalDispersive { alpha, beta } => {
                let fp = self.model.units.fourpi;
                let lap = self.hodge_laplacian(&s.e)?;
                let mut sum = s.e.scaled(alpha - 1.0);
                sum.axpy(beta, &lap);
                let mut out = self.stars.star(1).apply(&sum)?;
                out.scale(-1.0 / fp);
                Ok(out)
            }
            ModelVariant::Magnetoelectric { alpha } => {
                let sbar = self.cells_to_edges(&self.rho_b2(&reconstruct_at_centers(&s.b)?));
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut out = Cochain::zero(self.grid, ComplexId::Dual, 2);
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        out.values[idx] = -alpha * s1[a] * sbar[idx] * s.e.values[idx];
                    }
                }
                Ok(out)
            }
        }
    }

    /// Exact gradient of K with respect to the coefficients of b — a dual
    /// 1-cochain; the discrete magnetization is m̃¹ = −dk_db.
    pub fn dk_db(&self, s: &EBState) -> Result<Cochain> {
        self.check_eb(s)?;
        match self.model.variant {
            ModelVariant::Vacuum
            | ModelVariant::Kerr { .. }
            | ModelVariant::NonlocalDispersive { .. } => {
                Ok(Cochain::zero(self.grid, ComplexId::Dual, 1))
            }
            ModelVariant::Magnetoelectric { alpha } => {
                let g = self.metric.diag();
                let det = g[0] * g[1] * g[2];
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                // u(cell) = quadrature weight of |E|² gathered from edges
                let mut fe = vec![0.0; 3 * sites];
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        fe[idx] = s1[a] * s.e.values[idx] * s.e.values[idx];
                    }
                }
                let u = self.edges_to_cells(&fe);
                let p = reconstruct_at_centers(&s.b)?;
                let w: Vec<[f64; 3]> = p
                    .iter()
                    .zip(&u)
                    .map(|(p, &u)| {
                        let f = -alpha * u / det;
                        [f * g[0] * p[0], f * g[1] * p[1], f * g[2] * p[2]]
                    })
                    .collect();
                let grad = scatter_from_centers(self.grid, ComplexId::Primal, 2, &w);
                Ok(self.rewrap(grad, ComplexId::Dual, 1))
            }
        }
    }

    /// The Hodge Laplacian Δ_h = d d* + d* d on primal 1-cochains.
    fn hodge_laplacian(&self, e: &Cochain) -> Result<Cochain> {
        let div = self.stars.codifferential(&self.ops, e)?;
        let mut lap = self.ops.d(0).apply(&div)?;
        let curl = self.ops.d(1).apply(e)?;
        lap.axpy(1.0, &self.stars.codifferential(&self.ops, &curl)?);
        Ok(lap)
    }

    /// Directional derivative of dk_de (slots Ee, Be) or dk_db (slot Eb).
    pub fn hessian_action(&self, s: &EBState, which: HessianSlot, v: &Cochain) -> Result<Cochain> {
        self.check_eb(s)?;
        let want_degree = match which {
            HessianSlot::Ee | HessianSlot::Eb => 1,
            HessianSlot::Be => 2,
        };
        if (v.complex, v.degree) != (ComplexId::Primal, want_degree) || v.grid != self.grid {
            return Err(CoreError::CochainMismatch("hessian direction has wrong space".into()));
        }
        let out_degree = match which {
            HessianSlot::Ee | HessianSlot::Be => 2,
            HessianSlot::Eb => 1,
        };
        let zero = || Cochain::zero(self.grid, ComplexId::Dual, out_degree);
        let vol = self.grid.cell_volume();
        let sd = self.metric.sqrt_det();
        let g = self.metric.diag();
        match (self.model.variant, which) {
            (ModelVariant::Vacuum, _) => Ok(zero()),
            (ModelVariant::Kerr { chi1, chi3 }, HessianSlot::Ee) => {
                let cells = reconstruct_at_centers(&s.e)?;
                let rho2 = self.rho_e2(&cells);
                let vcells = reconstruct_at_centers(v)?;
                let w: Vec<[f64; 3]> = cells
                    .iter()
                    .zip(&vcells)
                    .zip(&rho2)
                    .map(|((e, v), &r)| {
                        let dot = e[0] * v[0] / g[0] + e[1] * v[1] / g[1] + e[2] * v[2] / g[2];
                        let mut w = [0.0; 3];
                        for a in 0..3 {
                            w[a] = -sd * vol * ((chi1 + chi3 * r) * v[a] + 2.0 * chi3 * dot * e[a]) / g[a];
                        }
                        w
                    })
                    .collect();
                let grad = scatter_from_centers(self.grid, ComplexId::Primal, 1, &w);
                Ok(self.rewrap(grad, ComplexId::Dual, 2))
            }
            (ModelVariant::Kerr { .. }, _) => Ok(zero()),
            (ModelVariant::NonlocalDispersive { alpha, beta }, HessianSlot::Ee) => {
                // the map is linear, so the Hessian action is dk_de itself
                let fp = self.model.units.fourpi;
                let lap = self.hodge_laplacian(v)?;
                let mut sum = v.scaled(alpha - 1.0);
                sum.axpy(beta, &lap);
                let mut out = self.stars.star(1).apply(&sum)?;
                out.scale(-1.0 / fp);
                Ok(out)
            }
            (ModelVariant::NonlocalDispersive { .. }, _) => Ok(zero()),
            (ModelVariant::Magnetoelectric { alpha }, HessianSlot::Ee) => {
                let sbar = self.cells_to_edges(&self.rho_b2(&reconstruct_at_centers(&s.b)?));
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut out = zero();
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        out.values[idx] = -alpha * s1[a] * sbar[idx] * v.values[idx];
                    }
                }
                Ok(out)
            }
            (ModelVariant::Magnetoelectric { alpha }, HessianSlot::Be) => {
                let p = reconstruct_at_centers(&s.b)?;
                let dp = reconstruct_at_centers(v)?;
                let det = g[0] * g[1] * g[2];
                let drho: Vec<f64> = p
                    .iter()
                    .zip(&dp)
                    .map(|(p, d)| 2.0 * (g[0] * p[0] * d[0] + g[1] * p[1] * d[1] + g[2] * p[2] * d[2]) / det)
                    .collect();
                let dsbar = self.cells_to_edges(&drho);
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut out = zero();
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        out.values[idx] = -alpha * s1[a] * dsbar[idx] * s.e.values[idx];
                    }
                }
                Ok(out)
            }
            (ModelVariant::Magnetoelectric { alpha }, HessianSlot::Eb) => {
                let det = g[0] * g[1] * g[2];
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut dfe = vec![0.0; 3 * sites];
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        dfe[idx] = 2.0 * s1[a] * s.e.values[idx] * v.values[idx];
                    }
                }
                let du = self.edges_to_cells(&dfe);
                let p = reconstruct_at_centers(&s.b)?;
                let w: Vec<[f64; 3]> = p
                    .iter()
                    .zip(&du)
                    .map(|(p, &du)| {
                        let f = -alpha * du / det;
                        [f * g[0] * p[0], f * g[1] * p[1], f * g[2] * p[2]]
                    })
                    .collect();
                let grad = scatter_from_centers(self.grid, ComplexId::Primal, 2, &w);
                Ok(self.rewrap(grad, ComplexId::Dual, 1))
            }
        }
    }

    /// d̃² = ⋆₁e − 4π·dk_de (the polarization enters with p̃² = −dk_de).
    pub fn d_from_e(&self, s: &EBState) -> Result<Cochain> {
        self.check_eb(s)?;
        let mut d = self.stars.star(1).apply(&s.e)?;
        if !matches!(self.model.variant, ModelVariant::Vacuum) {
            d.axpy(-self.model.units.fourpi, &self.dk_de(s)?);
        }
        Ok(d)
    }

    /// h̃¹ = ⋆₂b + 4π·dk_db (the magnetization enters with m̃¹ = −dk_db).
    pub fn h_from_b(&self, s: &EBState) -> Result<Cochain> {
        self.check_eb(s)?;
        let mut h = self.stars.star(2).apply(&s.b)?;
        if matches!(self.model.variant, ModelVariant::Magnetoelectric { .. }) {
            h.axpy(self.model.units.fourpi, &self.dk_db(s)?);
        }
        Ok(h)
    }

    /// Solves the monotone scalar relation a₁ρ + a₃ρ³ = rhs (the pointwise
    /// Kerr constitutive law, a₁ = 1+4πχ₁, a₃ = 4πχ₃).
    pub fn kerr_scalar_root(a1: f64, a3: f64, rhs: f64) -> Result<f64> {
        if !(a1 > 0.0) || !(a3 >= 0.0) {
            return Err(CoreError::NotInvertible);
        }
        let sign = rhs.signum();
        let r = rhs.abs();
        if r == 0.0 {
            return Ok(0.0);
        }
        // monotone increasing cubic: Newton from a bracketing guess
        let mut rho = (r / a1).min(if a3 > 0.0 { (r / a3).cbrt() } else { f64::INFINITY });
        for _ in 0..200 {
            let f = a1 * rho + a3 * rho * rho * rho - r;
            let df = a1 + 3.0 * a3 * rho * rho;
            if df <= 0.0 {
                return Err(CoreError::NotInvertible);
            }
            let step = f / df;
            rho -= step;
            if step.abs() <= 1e-15 * rho.abs().max(1e-300) {
                break;
            }
        }
        Ok(sign * rho)
    }

    /// Inverts the constitutive map: finds e with d_from_e(e, b) = d̃.
    ///
    /// Vacuum and Magnetoelectric invert in closed form, NonlocalDispersive
    /// by exact spectral solve, Kerr by a pointwise scalar cubic guess
    /// polished with Newton–CG on the cochain residual. Returns the solution
    /// and the number of Newton iterations spent.
    pub fn e_from_db(
        &self,
        s: &DBState,
        tol: f64,
        max_iter: usize,
        guess: Option<&Cochain>,
    ) -> Result<(Cochain, usize)> {
        self.check_db(s)?;
        let fp = self.model.units.fourpi;
        match self.model.variant {
            ModelVariant::Vacuum => Ok((self.stars.star(1).apply_inverse(&s.dtilde)?, 0)),
            ModelVariant::Magnetoelectric { alpha } => {
                let sbar = self.cells_to_edges(&self.rho_b2(&reconstruct_at_centers(&s.b)?));
                let s1 = self.stars.star(1).coefficients();
                let sites = self.grid.num_sites();
                let mut e = Cochain::zero(self.grid, ComplexId::Primal, 1);
                for a in 0..3 {
                    for site in 0..sites {
                        let idx = a * sites + site;
                        let denom = s1[a] * (1.0 + fp * alpha * sbar[idx]);
                        if denom <= 0.0 {
                            return Err(CoreError::NotInvertible);
                        }
                        e.values[idx] = s.dtilde.values[idx] / denom;
                    }
                }
                Ok((e, 0))
            }
            ModelVariant::NonlocalDispersive { .. } => {
                let solver = self.spectral.as_ref().expect("built at construction");
                let values = solver.solve(&s.dtilde.values);
                Ok((Cochain::from_values(self.grid, ComplexId::Primal, 1, values)?, 1))
            }
            ModelVariant::Kerr { chi1, chi3 } => self.kerr_solve(s, chi1, chi3, tol, max_iter, guess),
        }
    }

    fn kerr_solve(
        &self,
        s: &DBState,
        chi1: f64,
        chi3: f64,
        tol: f64,
        max_iter: usize,
        guess: Option<&Cochain>,
    ) -> Result<(Cochain, usize)> {
        let fp = self.model.units.fourpi;
        let a1 = 1.0 + fp * chi1;
        let a3 = fp * chi3;
        let mut e = match guess {
            Some(g) => g.clone(),
            None => {
                // vacuum solution, rescaled cell-by-cell through the scalar
                // cubic: for slowly varying fields |⋆₁⁻¹d̃| ≈ (a₁+a₃ρ²)ρ
                let e0 = self.stars.star(1).apply_inverse(&s.dtilde)?;
                let cells = reconstruct_at_centers(&e0)?;
                let rho2 = self.rho_e2(&cells);
                let lambda: Vec<f64> = rho2
                    .iter()
                    .map(|&r2| {
                        let r = r2.sqrt();
                        if r < 1e-300 {
                            return Ok(1.0);
                        }
                        Ok(Self::kerr_scalar_root(a1, a3, r)? / r)
                    })
                    .collect::<Result<_>>()?;
                let lbar = self.cells_to_edges(&lambda);
                let mut e = e0;
                for (v, l) in e.values.iter_mut().zip(&lbar) {
                    *v *= l;
                }
                e
            }
        };

        let mut iterations = 0;
        for _ in 0..max_iter {
            let r = self
                .d_from_e(&EBState { e: e.clone(), b: s.b.clone() })?
                .sub(&s.dtilde);
            if r.inf_norm() <= tol {
                return Ok((e, iterations));
            }
            iterations += 1;
            let delta = self.newton_cg_step(&e, chi1, chi3, &r, tol)?;
            e.axpy(-1.0, &delta);
        }
        let r = self
            .d_from_e(&EBState { e: e.clone(), b: s.b.clone() })?
            .sub(&s.dtilde);
        if r.inf_norm() <= tol {
            return Ok((e, iterations));
        }
        Err(CoreError::SolverDiverged { iterations, residual: r.inf_norm() })
    }

    /// One inexact Newton step: CG on J Δ = r with J = ⋆₁ − 4π H_ee, the
    /// (symmetric positive definite, in the monotone regime) Jacobian of
    /// d_from_e. `target` is the residual the outer iteration wants after
    /// this update, so the linear solve stops once further CG iterations
    /// can no longer help it — this runs in the innermost loop of the
    /// implicit integrator, and the linearization point (cells, rho2) is
    /// hoisted out of the CG iteration on purpose.
    fn newton_cg_step(
        &self,
        e: &Cochain,
        chi1: f64,
        chi3: f64,
        r: &Cochain,
        target: f64,
    ) -> Result<Cochain> {
        let fp = self.model.units.fourpi;
        let vol = self.grid.cell_volume();
        let sd = self.metric.sqrt_det();
        let g = self.metric.diag();
        let cells = reconstruct_at_centers(e)?;
        let rho2 = self.rho_e2(&cells);
        let apply_j = |v: &Cochain| -> Result<Cochain> {
            let vcells = reconstruct_at_centers(v)?;
            let w: Vec<[f64; 3]> = cells
                .iter()
                .zip(&vcells)
                .zip(&rho2)
                .map(|((ec, vc), &r2)| {
                    let dot = ec[0] * vc[0] / g[0] + ec[1] * vc[1] / g[1] + ec[2] * vc[2] / g[2];
                    let mut w = [0.0; 3];
                    for a in 0..3 {
                        w[a] = sd * vol * ((chi1 + chi3 * r2) * vc[a] + 2.0 * chi3 * dot * ec[a]) / g[a];
                    }
                    w
                })
                .collect();
            let mut jv = self.stars.star(1).apply(v)?;
            let h = scatter_from_centers(self.grid, ComplexId::Primal, 1, &w);
            jv.axpy(fp, &self.rewrap(h, ComplexId::Dual, 2));
            Ok(jv)
        };
        let mut x = Cochain::zero(self.grid, ComplexId::Primal, 1);
        let mut res = r.clone(); // CG residual in the dual (rhs) space
        let rhs_norm2 = res.dot(&res);
        if rhs_norm2 == 0.0 {
            return Ok(x);
        }
        // stop at relative 1e-4 or once the (equidistribution-estimated)
        // ∞-norm is safely under the outer target, whichever is looser
        let floor2 = (0.25 * target).powi(2) * res.values.len() as f64;
        let tol2 = (rhs_norm2 * 1e-8).max(floor2);
        let mut p = self.rewrap(res.clone(), ComplexId::Primal, 1);
        let mut rz = rhs_norm2;
        for _ in 0..(3 * self.grid.num_sites()) {
            let jp = apply_j(&p)?;
            let pjp = p.dot(&jp);
            if pjp <= 0.0 {
                return Err(CoreError::NotInvertible);
            }
            let alpha = rz / pjp;
            x.axpy(alpha, &p);
            res.axpy(-alpha, &jp);
            let rz_new = res.dot(&res);
            if rz_new <= tol2 {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for (pv, rv) in p.values.iter_mut().zip(&res.values) {
                *pv = rv + beta * *pv;
            }
        }
        Ok(x)
    }
}
