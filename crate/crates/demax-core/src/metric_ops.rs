//! All metric-dependent discrete structure: diagonal Hodge stars between
//! the two complexes, the L2 inner product they induce, and the
//! codifferential.
//!
//! Everything in [`crate::complex`] is metric-free; this module is the only
//! place where grid spacings combine with a material metric. Because every
//! dual (3−k)-entity coincides with one primal k-entity, the Hodge star is
//! diagonal: one positive coefficient per entity, the ratio of dual to
//! primal entity measures scaled by the pointwise Hodge of basis forms.

use crate::complex::{pairing, Cochain, ComplexId, DoubleComplex, GridSpec};
use crate::error::{CoreError, Result};
use crate::exterior3::Metric3;

/// A constant diagonal material metric diag(g₁, g₂, g₃).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialMetric {
    diag: [f64; 3],
    sqrt_det: f64,
}

impl MaterialMetric {
    pub fn identity() -> Self {
        Self { diag: [1.0; 3], sqrt_det: 1.0 }
    }

    pub fn diagonal(diag: [f64; 3]) -> Result<Self> {
        for (a, &d) in diag.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(CoreError::InvalidMetric(format!("g[{a}] must be positive, got {d}")));
            }
        }
        Ok(Self { diag, sqrt_det: (diag[0] * diag[1] * diag[2]).sqrt() })
    }

    /// Extracts the diagonal, rejecting metrics with off-diagonal terms.
    pub fn from_metric3(g: &Metric3) -> Result<Self> {
        let m = g.matrix();
        for r in 0..3 {
            for c in 0..3 {
                if r != c && m[r][c] != 0.0 {
                    return Err(CoreError::NonDiagonalMetric);
                }
            }
        }
        Self::diagonal([m[0][0], m[1][1], m[2][2]])
    }

    pub fn diag(&self) -> [f64; 3] {
        self.diag
    }

    pub fn sqrt_det(&self) -> f64 {
        self.sqrt_det
    }

    pub fn to_metric3(&self) -> Metric3 {
        Metric3::diagonal(self.diag).expect("diagonal entries validated at construction")
    }
}

/// A diagonal Hodge star mapping primal k-cochains to dual (3−k)-cochains.
///
/// The coefficient on a component-`a` entity is constant across the grid:
/// (pointwise Hodge of the basis form) × (dual measure / primal measure).
#[derive(Debug, Clone)]
pub struct HodgeOperator {
    pub grid: GridSpec,
    pub degree: usize,
    coeff: [f64; 3],
}

impl HodgeOperator {
    /// Per-component diagonal coefficients (components 1 and 2 unused for
    /// degrees 0 and 3).
    pub fn coefficients(&self) -> [f64; 3] {
        self.coeff
    }

    fn check(&self, c: &Cochain, complex: ComplexId, degree: usize) -> Result<()> {
        if c.grid != self.grid || c.complex != complex || c.degree != degree {
            return Err(CoreError::CochainMismatch(format!(
                "hodge (degree {}) cannot act on ({:?}, degree {})",
                self.degree, c.complex, c.degree
            )));
        }
        Ok(())
    }

    /// Primal k → dual (3−k).
    pub fn apply(&self, c: &Cochain) -> Result<Cochain> {
        self.check(c, ComplexId::Primal, self.degree)?;
        let mut out = Cochain::zero(self.grid, ComplexId::Dual, 3 - self.degree);
        let sites = self.grid.num_sites();
        for (i, (o, v)) in out.values.iter_mut().zip(&c.values).enumerate() {
            *o = self.coeff[i / sites] * v;
        }
        Ok(out)
    }

    /// Dual (3−k) → primal k.
    pub fn apply_inverse(&self, c: &Cochain) -> Result<Cochain> {
        self.check(c, ComplexId::Dual, 3 - self.degree)?;
        let mut out = Cochain::zero(self.grid, ComplexId::Primal, self.degree);
        let sites = self.grid.num_sites();
        for (i, (o, v)) in out.values.iter_mut().zip(&c.values).enumerate() {
            *o = v / self.coeff[i / sites];
        }
        Ok(out)
    }
}

/// Builds the diagonal Hodge star of degree `k` for a uniform grid and a
/// constant diagonal metric.
pub fn build_hodge(grid: GridSpec, g: &MaterialMetric, k: usize) -> Result<HodgeOperator> {
    if k > 3 {
        return Err(CoreError::DegreeOverflow);
    }
    let [g1, g2, g3] = g.diag();
    let gd = [g1, g2, g3];
    let sd = g.sqrt_det();
    let h = grid.h;
    let vol = grid.cell_volume();
    let mut coeff = [1.0; 3];
    match k {
        0 => coeff = [sd * vol; 3],
        1 => {
            // ⋆ dxᵃ = √det g · g^{aa} dxᵇ∧dxᶜ, then dual-face / edge measures
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                coeff[a] = (sd / gd[a]) * h[b] * h[c] / h[a];
            }
        }
        2 => {
            // ⋆ dxᵇ∧dxᶜ = (g_a/√det g) dxᵃ, then dual-edge / face measures
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                coeff[a] = (gd[a] / sd) * h[a] / (h[b] * h[c]);
            }
        }
        3 => coeff = [1.0 / (sd * vol); 3],
        _ => unreachable!(),
    }
    Ok(HodgeOperator { grid, degree: k, coeff })
}

/// The discrete L2 inner product induced by the star: ⟨a, ⋆b⟩.
pub fn l2_inner(a: &Cochain, b: &Cochain, star: &HodgeOperator) -> Result<f64> {
    if !a.same_space(b) {
        return Err(CoreError::CochainMismatch("l2_inner: operand spaces differ".into()));
    }
    pairing(a, &star.apply(b)?)
}

/// The full family of Hodge stars for one grid/metric pair.
#[derive(Debug, Clone)]
pub struct HodgeSuite {
    pub grid: GridSpec,
    pub metric: MaterialMetric,
    stars: [HodgeOperator; 4],
}

impl HodgeSuite {
    pub fn build(grid: GridSpec, metric: MaterialMetric) -> Self {
        let stars = [
            build_hodge(grid, &metric, 0).expect("degree in range"),
            build_hodge(grid, &metric, 1).expect("degree in range"),
            build_hodge(grid, &metric, 2).expect("degree in range"),
            build_hodge(grid, &metric, 3).expect("degree in range"),
        ];
        Self { grid, metric, stars }
    }

    pub fn star(&self, k: usize) -> &HodgeOperator {
        &self.stars[k]
    }

    /// L2 inner product of two primal k-cochains.
    pub fn l2(&self, a: &Cochain, b: &Cochain) -> Result<f64> {
        l2_inner(a, b, &self.stars[a.degree])
    }

    /// The codifferential δ_k = (−1)^{4−k} ⋆_{k−1}⁻¹ d̃_{3−k} ⋆_k on primal
    /// k-cochains, the exact L2 adjoint of d: l2(d f, a) = l2(f, δ a).
    ///
    /// The sign follows from the discrete Stokes relation and is pinned down
    /// operationally by the single-complex backend reproducing the
    /// double-complex evolution bit-for-bit on linear media.
    pub fn codifferential(&self, ops: &DoubleComplex, a: &Cochain) -> Result<Cochain> {
        let k = a.degree;
        if k == 0 || a.complex != ComplexId::Primal {
            return Err(CoreError::CochainMismatch(
                "codifferential needs a primal cochain of degree >= 1".into(),
            ));
        }
        let mut out = self.stars[k - 1].apply_inverse(&ops.dual_d(3 - k).apply(&self.stars[k].apply(a)?)?)?;
        if (4 - k) % 2 == 1 {
            out.scale(-1.0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::de_rham_vector;
    use crate::exterior3::{hodge, Form};
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: [usize; 3], h: [f64; 3]) -> GridSpec {
        GridSpec::new(n, h).unwrap()
    }

    fn random_cochain(g: GridSpec, complex: ComplexId, degree: usize, rng: &mut ChaCha8Rng) -> Cochain {
        let mut c = Cochain::zero(g, complex, degree);
        for v in &mut c.values {
            *v = rng.gen_range(-1.0..1.0);
        }
        c
    }

    #[test]
    fn metric_construction() {
        assert!(MaterialMetric::diagonal([1.0, -1.0, 1.0]).is_err());
        let g = Metric3::new([[1.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(MaterialMetric::from_metric3(&g), Err(CoreError::NonDiagonalMetric)));
        let d = Metric3::diagonal([4.0, 1.0, 1.0]).unwrap();
        assert_eq!(MaterialMetric::from_metric3(&d).unwrap().diag(), [4.0, 1.0, 1.0]);
    }

    #[test]
    fn hodge_coefficient_examples() {
        let unit = grid([3, 3, 3], [1.0; 3]);
        let id = MaterialMetric::identity();
        assert_eq!(build_hodge(unit, &id, 1).unwrap().coefficients(), [1.0; 3]);

        let aniso = grid([3, 3, 3], [2.0, 1.0, 1.0]);
        let c = build_hodge(aniso, &id, 1).unwrap().coefficients();
        assert_eq!(c[0], 0.5);
        assert_eq!(c[1], 2.0);

        let g = MaterialMetric::diagonal([4.0, 1.0, 1.0]).unwrap();
        let c = build_hodge(unit, &g, 1).unwrap().coefficients();
        assert!((c[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hodge_coefficients_match_pointwise_basis_hodge() {
        // On a unit-measure-normalized entity, the discrete coefficient is
        // (pointwise ⋆ of the basis form) × (dual measure / primal measure).
        let g3 = Metric3::diagonal([2.0, 3.0, 5.0]).unwrap();
        let g = MaterialMetric::from_metric3(&g3).unwrap();
        let gr = grid([2, 2, 2], [0.3, 0.7, 1.1]);
        let h = gr.h;
        for k in [1usize, 2] {
            let op = build_hodge(gr, &g, k).unwrap();
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let mut comps = [0.0; 3];
                comps[a] = 1.0;
                let basis = if k == 1 { Form::one(comps) } else { Form::two(comps, false) };
                let pointwise = hodge(&g3, &basis).components[a];
                let measure_ratio = if k == 1 {
                    h[b] * h[c] / h[a]
                } else {
                    h[a] / (h[b] * h[c])
                };
                assert!((op.coefficients()[a] - pointwise * measure_ratio).abs() < 1e-14);
            }
        }
        let s0 = build_hodge(gr, &g, 0).unwrap();
        let pointwise = hodge(&g3, &Form::scalar(1.0)).components[0];
        assert!((s0.coefficients()[0] - pointwise * gr.cell_volume()).abs() < 1e-14);
    }

    #[test]
    fn defining_relation_and_inverse_roundtrip() {
        let gr = grid([3, 4, 2], [0.5, 0.3, 0.9]);
        let g = MaterialMetric::diagonal([2.0, 1.0, 0.5]).unwrap();
        let suite = HodgeSuite::build(gr, g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..4usize {
            let a = random_cochain(gr, ComplexId::Primal, k, &mut rng);
            let b = random_cochain(gr, ComplexId::Primal, k, &mut rng);
            let star = suite.star(k);
            let lhs = l2_inner(&a, &b, star).unwrap();
            assert_eq!(lhs, pairing(&a, &star.apply(&b).unwrap()).unwrap());
            // symmetry of a diagonal quadratic form
            let rhs = l2_inner(&b, &a, star).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0));
            // positive definiteness
            assert!(l2_inner(&a, &a, star).unwrap() > 0.0);
            // inverse round trip
            let back = star.apply_inverse(&star.apply(&a).unwrap()).unwrap();
            assert!(back.sub(&a).inf_norm() < 1e-14);
        }
    }

    #[test]
    fn basis_edge_l2_is_its_coefficient() {
        let gr = grid([3, 3, 3], [1.0; 3]);
        let suite = HodgeSuite::build(gr, MaterialMetric::identity());
        let mut a = Cochain::zero(gr, ComplexId::Primal, 1);
        a.values[4] = 1.0;
        assert_eq!(suite.l2(&a, &a).unwrap(), suite.star(1).coefficients()[0]);
    }

    #[test]
    fn l2_converges_to_metric_integral() {
        // ω = η = sin(2πx/L) dx¹ on g = diag(4,1,1):
        // ∫ g(ω,ω) √det g vol = g^{11}√det g ∫ sin² = (1/4)(2)(L₁L₂L₃/2)
        let g3 = Metric3::diagonal([4.0, 1.0, 1.0]).unwrap();
        let g = MaterialMetric::from_metric3(&g3).unwrap();
        let val = |n: usize| {
            let gr = grid([n, 2, 2], [1.0 / n as f64, 0.5, 0.5]);
            let l = gr.lengths()[0];
            let k = 2.0 * PI / l;
            // exact entity integrals, so only the pairing defect remains
            let mut w = Cochain::zero(gr, ComplexId::Primal, 1);
            for s in 0..gr.num_sites() {
                let x0 = (s % gr.n[0]) as f64 * gr.h[0];
                w.values[s] = ((k * x0).cos() - (k * (x0 + gr.h[0])).cos()) / k;
            }
            let suite = HodgeSuite::build(gr, g);
            suite.l2(&w, &w).unwrap()
        };
        let exact = 0.25;
        let (e1, e2) = ((val(16) - exact).abs(), (val(32) - exact).abs());
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "errors {e1} {e2}");
    }

    #[test]
    fn metric_quarantine() {
        // changing g must leave everything in `complex` bit-identical
        let gr = grid([3, 4, 2], [0.5, 0.3, 0.9]);
        let ops = DoubleComplex::build(gr);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_cochain(gr, ComplexId::Primal, 1, &mut rng);
        let b = random_cochain(gr, ComplexId::Dual, 2, &mut rng);
        let d_ref = ops.d(1).apply(&a).unwrap();
        let p_ref = pairing(&a, &b).unwrap();
        let s1 = HodgeSuite::build(gr, MaterialMetric::identity());
        let s2 = HodgeSuite::build(gr, MaterialMetric::diagonal([4.0, 0.3, 2.0]).unwrap());
        assert_ne!(s1.l2(&a, &a).unwrap(), s2.l2(&a, &a).unwrap());
        assert_eq!(ops.d(1).apply(&a).unwrap().values, d_ref.values);
        assert_eq!(pairing(&a, &b).unwrap(), p_ref);
    }

    #[test]
    fn codifferential_adjointness_and_nilpotence() {
        let gr = grid([3, 4, 5], [0.5, 0.3, 0.9]);
        let ops = DoubleComplex::build(gr);
        let suite = HodgeSuite::build(gr, MaterialMetric::diagonal([2.0, 1.0, 0.5]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 1..4usize {
            for _ in 0..5 {
                let f = random_cochain(gr, ComplexId::Primal, k - 1, &mut rng);
                let a = random_cochain(gr, ComplexId::Primal, k, &mut rng);
                let lhs = suite.l2(&ops.d(k - 1).apply(&f).unwrap(), &a).unwrap();
                let rhs = suite.l2(&f, &suite.codifferential(&ops, &a).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0), "k={k}: {lhs} vs {rhs}");
            }
            if k >= 2 {
                let a = random_cochain(gr, ComplexId::Primal, k, &mut rng);
                let dd = suite
                    .codifferential(&ops, &suite.codifferential(&ops, &a).unwrap())
                    .unwrap();
                assert!(dd.inf_norm() < 1e-13 * a.inf_norm());
            }
        }
        // constant 1-cochain has zero divergence
        let c = Cochain::from_values(gr, ComplexId::Primal, 1, vec![1.0; gr.entity_count(1)]).unwrap();
        assert!(suite.codifferential(&ops, &c).unwrap().inf_norm() < 1e-14);
        // degree 0 rejected
        let z = Cochain::zero(gr, ComplexId::Primal, 0);
        assert!(suite.codifferential(&ops, &z).is_err());
    }

    #[test]
    fn codifferential_matches_negative_divergence() {
        // E = (sin(2πx/L), 0, 0) ⇒ −∇·E = −(2π/L)cos(2πx/L)
        let err = |n: usize| {
            let gr = grid([n, 2, 2], [1.0 / n as f64, 0.5, 0.5]);
            let ops = DoubleComplex::build(gr);
            let suite = HodgeSuite::build(gr, MaterialMetric::identity());
            let l = gr.lengths()[0];
            let k = 2.0 * PI / l;
            let e = de_rham_vector(gr, ComplexId::Primal, 1, |x| [(k * x[0]).sin(), 0.0, 0.0]);
            let div = suite.codifferential(&ops, &e).unwrap();
            let mut worst = 0.0f64;
            for s in 0..gr.num_sites() {
                let x0 = (s % gr.n[0]) as f64 * gr.h[0];
                let exact = -k * (k * x0).cos();
                worst = worst.max((div.values[s] - exact).abs());
            }
            worst
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "errors {e1} {e2}");
    }
}
