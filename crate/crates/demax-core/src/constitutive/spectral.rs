//! Fourier-space inversion of the nonlocal-dispersive constitutive map.
//!
//! On a periodic uniform grid every translation-invariant operator block-
//! diagonalizes over wavevectors, so the map e ↦ ⋆₁[α e + β Δ_h e]
//! becomes one 3×3 Hermitian system per wavevector. This both inverts the
//! map exactly (to roundoff) and yields the positive-definiteness check
//! demanded by the model's invariant: the smallest elimination pivot over
//! all wavevectors must be positive.

use crate::complex::GridSpec;
use crate::error::{CoreError, Result};
use crate::metric_ops::HodgeSuite;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct SpectralInverse {
    n: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    /// One Hermitian 3×3 symbol per site, row-major.
    symbols: Vec<[[Complex<f64>; 3]; 3]>,
    /// Smallest elimination pivot across all wavevectors, in units of the
    /// ⋆₁ coefficients (so ≈ the smallest eigenvalue of αI + βΔ_h).
    pub min_pivot: f64,
}

impl std::fmt::Debug for SpectralInverse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralInverse")
            .field("n", &self.n)
            .field("min_pivot", &self.min_pivot)
            .finish()
    }
}

impl SpectralInverse {
    pub fn build(grid: GridSpec, stars: &HodgeSuite, alpha: f64, beta: f64) -> Result<Self> {
        let n = grid.n;
        let sites = grid.num_sites();
        let s0 = stars.star(0).coefficients()[0];
        let s1 = stars.star(1).coefficients();
        let s2 = stars.star(2).coefficients();

        let mut symbols = Vec::with_capacity(sites);
        let mut min_pivot = f64::INFINITY;
        for kz in 0..n[2] {
            for ky in 0..n[1] {
                for kx in 0..n[0] {
                    let theta = [
                        2.0 * PI * kx as f64 / n[0] as f64,
                        2.0 * PI * ky as f64 / n[1] as f64,
                        2.0 * PI * kz as f64 / n[2] as f64,
                    ];
                    // symbol of the forward difference on axis a
                    let u: Vec<Complex<f64>> =
                        theta.iter().map(|&t| Complex::new(t.cos() - 1.0, t.sin())).collect();
                    // rows of the curl (d₁) symbol: face a gets −u_c e_b + u_b e_c
                    let mut d1 = [[Complex::new(0.0, 0.0); 3]; 3];
                    for a in 0..3 {
                        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                        d1[a][b] = -u[c];
                        d1[a][c] = u[b];
                    }
                    let mut m = [[Complex::new(0.0, 0.0); 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            // grad∘div part: (⋆₁u)_a (⋆₁u)_b* / ⋆₀
                            let mut v = (s1[a] * u[a]) * (s1[b] * u[b]).conj() / s0;
                            // curl∘curl part: Σ_f d₁[f][a]* ⋆₂_f d₁[f][b]
                            for f in 0..3 {
                                v += d1[f][a].conj() * s2[f] * d1[f][b];
                            }
                            m[a][b] = beta * v;
                            if a == b {
                                m[a][b] += alpha * s1[a];
                            }
                        }
                    }
                    // Hermitian elimination pivots; all positive ⟺ PD
                    let mut w = m;
                    let scale = (s1[0] * s1[1] * s1[2]).powf(1.0 / 3.0);
                    for p in 0..3 {
                        let piv = w[p][p].re;
                        min_pivot = min_pivot.min(piv / scale);
                        if piv <= 0.0 {
                            return Err(CoreError::InvalidModel(format!(
                                "dispersive operator not positive definite (pivot {piv:.3e} at mode ({kx},{ky},{kz}))"
                            )));
                        }
                        for r in (p + 1)..3 {
                            let f = w[r][p] / w[p][p];
                            for c in p..3 {
                                let sub = f * w[p][c];
                                w[r][c] -= sub;
                            }
                        }
                    }
                    symbols.push(m);
                }
            }
        }

        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(n[0]),
            planner.plan_fft_forward(n[1]),
            planner.plan_fft_forward(n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(n[0]),
            planner.plan_fft_inverse(n[1]),
            planner.plan_fft_inverse(n[2]),
        ];
        Ok(Self { n, fwd, inv, symbols, min_pivot })
    }

    fn fft3(&self, data: &mut [Complex<f64>], inverse: bool) {
        let plans = if inverse { &self.inv } else { &self.fwd };
        let [nx, ny, nz] = self.n;
        // axis 0: contiguous lines
        for line in data.chunks_exact_mut(nx) {
            plans[0].process(line);
        }
        // axes 1 and 2: gather strided lines
        let mut scratch = vec![Complex::new(0.0, 0.0); ny.max(nz)];
        for k in 0..nz {
            for i in 0..nx {
                for j in 0..ny {
                    scratch[j] = data[i + nx * (j + ny * k)];
                }
                plans[1].process(&mut scratch[..ny]);
                for j in 0..ny {
                    data[i + nx * (j + ny * k)] = scratch[j];
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                for k in 0..nz {
                    scratch[k] = data[i + nx * (j + ny * k)];
                }
                plans[2].process(&mut scratch[..nz]);
                for k in 0..nz {
                    data[i + nx * (j + ny * k)] = scratch[k];
                }
            }
        }
    }

    /// Solves M e = d̃ for the coefficient vector of e (3 component blocks).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let sites = self.n[0] * self.n[1] * self.n[2];
        debug_assert_eq!(rhs.len(), 3 * sites);
        let mut hat: Vec<Vec<Complex<f64>>> = (0..3)
            .map(|a| {
                let mut v: Vec<Complex<f64>> =
                    rhs[a * sites..(a + 1) * sites].iter().map(|&x| Complex::new(x, 0.0)).collect();
                self.fft3(&mut v, false);
                v
            })
            .collect();

        for s in 0..sites {
            let m = &self.symbols[s];
            let b = [hat[0][s], hat[1][s], hat[2][s]];
            let x = solve3(m, b);
            hat[0][s] = x[0];
            hat[1][s] = x[1];
            hat[2][s] = x[2];
        }

        let norm = 1.0 / sites as f64;
        let mut out = vec![0.0f64; 3 * sites];
        for a in 0..3 {
            self.fft3(&mut hat[a], true);
            for s in 0..sites {
                out[a * sites + s] = hat[a][s].re * norm;
            }
        }
        out
    }
}

/// Direct 3×3 complex solve with partial pivoting.
fn solve3(m: &[[Complex<f64>; 3]; 3], b: [Complex<f64>; 3]) -> [Complex<f64>; 3] {
    let mut a = *m;
    let mut x = b;
    for p in 0..3 {
        let mut best = p;
        for r in (p + 1)..3 {
            if a[r][p].norm_sqr() > a[best][p].norm_sqr() {
                best = r;
            }
        }
        a.swap(p, best);
        x.swap(p, best);
        for r in (p + 1)..3 {
            let f = a[r][p] / a[p][p];
            for c in p..3 {
                let sub = f * a[p][c];
                a[r][c] -= sub;
            }
            let sub = f * x[p];
            x[r] -= sub;
        }
    }
    for p in (0..3).rev() {
        for c in (p + 1)..3 {
            let sub = a[p][c] * x[c];
            x[p] -= sub;
        }
        x[p] /= a[p][p];
    }
    x
}
