//! Pointwise exterior algebra on a 3-dimensional vector space with a
//! constant SPD metric.
//!
//! This module is deliberately tiny and allocation-light: it exists to pin
//! down the algebraic identities (musical isomorphisms, Hodge star, wedge
//! product) that the grid-level operators in [`crate::metric_ops`] must
//! reproduce, and it doubles as the oracle for the verification suite.
//!
//! Conventions: 1-form components are stored against `dx^1, dx^2, dx^3`;
//! 2-form components against `dx^2∧dx^3, dx^3∧dx^1, dx^1∧dx^2` so that
//! vector proxies map index-to-index. Twistedness is a runtime flag that
//! only matters under orientation-reversing transforms.

use crate::error::{CoreError, Result};
use serde::Serialize;

/// A constant symmetric positive-definite metric with cached inverse.
#[derive(Debug, Clone)]
pub struct Metric3 {
    g: [[f64; 3]; 3],
    det: f64,
    inv: [[f64; 3]; 3],
}

impl Metric3 {
    pub fn new(g: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                if g[i][j] != g[j][i] {
                    return Err(CoreError::InvalidMetric("matrix is not symmetric".into()));
                }
                if !g[i][j].is_finite() {
                    return Err(CoreError::InvalidMetric("non-finite entry".into()));
                }
            }
        }
        // leading principal minors
        let m1 = g[0][0];
        let m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let m3 = det3(&g);
        if m1 <= 0.0 || m2 <= 0.0 || m3 <= 0.0 {
            return Err(CoreError::InvalidMetric("matrix is not positive definite".into()));
        }
        let inv = inv3(&g, m3);
        Ok(Self { g, det: m3, inv })
    }

    pub fn identity() -> Self {
        Self::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap()
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::new([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.g
    }

    pub fn inverse(&self) -> &[[f64; 3]; 3] {
        &self.inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn sqrt_det(&self) -> f64 {
        self.det.sqrt()
    }

    /// `W · V = W^i g_ij V^j`
    pub fn dot(&self, w: &Vec3, v: &Vec3) -> f64 {
        let gw = mat_vec(&self.g, &w.0);
        gw[0] * v.0[0] + gw[1] * v.0[1] + gw[2] * v.0[2]
    }

    /// Metric cross product, defined by `vol(U,V,W) = (U×V)·W`.
    pub fn cross(&self, u: &Vec3, v: &Vec3) -> Vec3 {
        let c = [
            u.0[1] * v.0[2] - u.0[2] * v.0[1],
            u.0[2] * v.0[0] - u.0[0] * v.0[2],
            u.0[0] * v.0[1] - u.0[1] * v.0[0],
        ];
        Vec3(mat_vec(&self.inv, &c).map(|x| x * self.sqrt_det()))
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            let (c, d) = ((j + 1) % 3, (j + 2) % 3);
            // cofactor transpose
            inv[j][i] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    inv
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// A vector with contravariant components `V^i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3(pub [f64; 3]);

/// A k-form at a point. Component order is the module convention above.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub degree: usize,
    pub twisted: bool,
    pub components: Vec<f64>,
}

impl Form {
    pub fn new(degree: usize, twisted: bool, components: Vec<f64>) -> Self {
        let expect = match degree {
            0 | 3 => 1,
            1 | 2 => 3,
            _ => panic!("degree out of range"),
        };
        assert_eq!(components.len(), expect, "component count mismatch");
        Self { degree, twisted, components }
    }

    pub fn scalar(v: f64) -> Self {
        Self::new(0, false, vec![v])
    }

    pub fn one(c: [f64; 3]) -> Self {
        Self::new(1, false, c.to_vec())
    }

    pub fn two(c: [f64; 3], twisted: bool) -> Self {
        Self::new(2, twisted, c.to_vec())
    }

    pub fn volume(v: f64) -> Self {
        Self::new(3, true, vec![v])
    }

    /// Pullback under the linear coordinate change `x ↦ T x` (constant `T`),
    /// i.e. the components of the same form in the new basis. Twisted forms
    /// pick up an extra `sign(det T)`.
    pub fn pullback(&self, t: &[[f64; 3]; 3]) -> Form {
        let det = det3(t);
        let sign = if self.twisted { det.signum() } else { 1.0 };
        let comps = match self.degree {
            0 => vec![self.components[0] * sign],
            1 => {
                // covariant: a'_i = T_ji a_j
                let a = [self.components[0], self.components[1], self.components[2]];
                let tt = transpose(t);
                mat_vec(&tt, &a).map(|x| x * sign).to_vec()
            }
            2 => {
                // pseudo-vector components: p' = det(T) T^{-1} p
                let p = [self.components[0], self.components[1], self.components[2]];
                let tinv = inv3(t, det);
                mat_vec(&tinv, &p).map(|x| x * det * sign).to_vec()
            }
            3 => vec![self.components[0] * det * sign],
            _ => unreachable!(),
        };
        Form::new(self.degree, self.twisted, comps)
    }
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Index lowering: `v_i = g_ij V^j`.
pub fn flat(g: &Metric3, v: &Vec3) -> Form {
    Form::one(mat_vec(g.matrix(), &v.0))
}

/// Index raising, inverse of [`flat`].
pub fn sharp(g: &Metric3, a: &Form) -> Vec3 {
    assert_eq!(a.degree, 1, "sharp expects a 1-form");
    let c = [a.components[0], a.components[1], a.components[2]];
    Vec3(mat_vec(g.inverse(), &c))
}

/// `i_V vol³`: the twisted 2-form with components `√det(g) V^i`.
pub fn interior_volume(g: &Metric3, v: &Vec3) -> Form {
    let s = g.sqrt_det();
    Form::two([s * v.0[0], s * v.0[1], s * v.0[2]], true)
}

/// Pointwise metric inner product of two k-forms of equal degree.
pub fn pointwise_inner(g: &Metric3, a: &Form, b: &Form) -> f64 {
    assert_eq!(a.degree, b.degree, "inner product needs equal degrees");
    match a.degree {
        0 => a.components[0] * b.components[0],
        1 => {
            let bc = [b.components[0], b.components[1], b.components[2]];
            let gb = mat_vec(g.inverse(), &bc);
            a.components[0] * gb[0] + a.components[1] * gb[1] + a.components[2] * gb[2]
        }
        2 => {
            // via pseudo-vector proxies: <a,b>_2 = aᵀ g b / det g
            let bc = [b.components[0], b.components[1], b.components[2]];
            let gb = mat_vec(g.matrix(), &bc);
            (a.components[0] * gb[0] + a.components[1] * gb[1] + a.components[2] * gb[2]) / g.det()
        }
        3 => a.components[0] * b.components[0] / g.det(),
        _ => unreachable!(),
    }
}

/// Hodge star `⋆: Λ^k → Λ̃^{3-k}` defined by `(a, b) vol = a ∧ ⋆b`.
pub fn hodge(g: &Metric3, a: &Form) -> Form {
    let s = g.sqrt_det();
    let twisted = !a.twisted;
    match a.degree {
        0 => Form::new(3, twisted, vec![a.components[0] * s]),
        1 => {
            let v = sharp(g, &Form::one([a.components[0], a.components[1], a.components[2]]));
            Form::new(2, twisted, vec![s * v.0[0], s * v.0[1], s * v.0[2]])
        }
        2 => {
            // a = i_V vol ⇒ ⋆a = V♭
            let c = [a.components[0] / s, a.components[1] / s, a.components[2] / s];
            Form::new(1, twisted, mat_vec(g.matrix(), &c).to_vec())
        }
        3 => Form::new(0, twisted, vec![a.components[0] / s]),
        _ => unreachable!(),
    }
}

/// Wedge product. Errors when the result degree exceeds 3.
pub fn wedge(a: &Form, b: &Form) -> Result<Form> {
    let deg = a.degree + b.degree;
    if deg > 3 {
        return Err(CoreError::DegreeOverflow);
    }
    let twisted = a.twisted ^ b.twisted;
    let c = &a.components;
    let d = &b.components;
    let comps = match (a.degree, b.degree) {
        (0, _) => d.iter().map(|x| x * c[0]).collect(),
        (_, 0) => c.iter().map(|x| x * d[0]).collect(),
        (1, 1) => vec![
            c[1] * d[2] - c[2] * d[1],
            c[2] * d[0] - c[0] * d[2],
            c[0] * d[1] - c[1] * d[0],
        ],
        (1, 2) => vec![c[0] * d[0] + c[1] * d[1] + c[2] * d[2]],
        (2, 1) => vec![c[0] * d[0] + c[1] * d[1] + c[2] * d[2]],
        _ => unreachable!(),
    };
    Ok(Form::new(deg, twisted, comps))
}

/// `vol(U, V, W) = √det(g) det[U V W]`
pub fn volume_of(g: &Metric3, u: &Vec3, v: &Vec3, w: &Vec3) -> f64 {
    let m = [
        [u.0[0], v.0[0], w.0[0]],
        [u.0[1], v.0[1], w.0[1]],
        [u.0[2], v.0[2], w.0[2]],
    ];
    g.sqrt_det() * det3(&m)
}

/// Residuals from the identity suite, one per checked proposition.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// `⋆(u ∧ v ∧ w) = vol(U, V, W)`
    pub triple_wedge: f64,
    /// `u ∧ ṽ² = (U·V) vol³`
    pub dot_product: f64,
    /// `u ∧ v = i_{U×V} vol³`
    pub cross_product: f64,
    /// `i_V vol³ = ⋆ V♭` and `sharp(flat(V)) = V`
    pub musical: f64,
    pub max_residual: f64,
}

/// Checks the wedge/musical propositions on random vectors drawn from `rng`.
pub fn verify_identities<R: rand::Rng>(g: &Metric3, trials: usize, rng: &mut R) -> IdentityReport {
    let mut triple = 0.0f64;
    let mut dot = 0.0f64;
    let mut cross = 0.0f64;
    let mut musical = 0.0f64;
    for _ in 0..trials.max(1) {
        let rv = |rng: &mut R| Vec3([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let (u, v, w) = (rv(rng), rv(rng), rv(rng));
        let (uf, vf, wf) = (flat(g, &u), flat(g, &v), flat(g, &w));

        let uvw = wedge(&wedge(&uf, &vf).unwrap(), &wf).unwrap();
        triple = triple.max((hodge(g, &uvw).components[0] - volume_of(g, &u, &v, &w)).abs());

        let vtilde = interior_volume(g, &v);
        let lhs = wedge(&uf, &vtilde).unwrap();
        dot = dot.max((lhs.components[0] - g.dot(&u, &v) * g.sqrt_det()).abs());

        let uxv = g.cross(&u, &v);
        let rhs = interior_volume(g, &uxv);
        let lhs = wedge(&uf, &vf).unwrap();
        for i in 0..3 {
            cross = cross.max((lhs.components[i] - rhs.components[i]).abs());
        }

        let star_flat = hodge(g, &uf);
        let iv = interior_volume(g, &u);
        for i in 0..3 {
            musical = musical.max((star_flat.components[i] - iv.components[i]).abs());
        }
        let back = sharp(g, &flat(g, &u));
        for i in 0..3 {
            musical = musical.max((back.0[i] - u.0[i]).abs());
        }
    }
    IdentityReport {
        triple_wedge: triple,
        dot_product: dot,
        cross_product: cross,
        musical,
        max_residual: triple.max(dot).max(cross).max(musical),
    }
}
