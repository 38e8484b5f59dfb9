use super::*;
use rand::{Rng, SeedableRng};
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
fn grid_validation() {
    assert!(GridSpec::new([1, 2, 2], [1.0; 3]).is_err());
    assert!(GridSpec::new([2, 2, 2], [0.0, 1.0, 1.0]).is_err());
    assert!(GridSpec::new([2, 2, 2], [1.0; 3]).is_ok());
}

#[test]
fn d_compose_d_is_zero_exactly() {
    for n in [[2, 2, 2], [3, 4, 5]] {
        let ops = DoubleComplex::build(grid(n, [1.0, 0.7, 1.3]));
        assert!(ops.d(1).compose_is_zero(ops.d(0)));
        assert!(ops.d(2).compose_is_zero(ops.d(1)));
        assert!(ops.dual_d(1).compose_is_zero(ops.dual_d(0)));
        assert!(ops.dual_d(2).compose_is_zero(ops.dual_d(1)));
    }
}

#[test]
fn stokes_adjunction_exhaustive_basis() {
    let g = grid([3, 4, 5], [0.5, 1.0, 0.25]);
    let ops = DoubleComplex::build(g);
    for k in 0..3usize {
        let sign = if (3 - k) % 2 == 0 { 1i8 } else { -1i8 };
        let d = ops.d(k);
        let dt = ops.dual_d(2 - k);
        // ⟨d_k a, b̃⟩ = (−1)^{3−k} ⟨a, d̃_{2−k} b̃⟩ for all basis pairs is the
        // entry-wise statement d_k[r][c] = (−1)^{3−k} d̃_{2−k}[c][r].
        let mut lhs = vec![std::collections::BTreeMap::new(); d.rows];
        for r in 0..d.rows {
            for (c, s) in d.entries(r) {
                lhs[r].insert(c, s);
            }
        }
        for c in 0..dt.rows {
            for (r, s) in dt.entries(c) {
                assert_eq!(lhs[r].get(&c).copied().unwrap_or(0), sign * s, "k={k} r={r} c={c}");
            }
        }
        let total: usize = lhs.iter().map(|m| m.len()).sum();
        assert_eq!(total, dt.nnz());
    }
}

#[test]
fn stokes_adjunction_random_cochains() {
    let g = grid([3, 4, 5], [0.5, 1.0, 0.25]);
    let ops = DoubleComplex::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..3usize {
        let sign = if (3 - k) % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..5 {
            let a = random_cochain(g, ComplexId::Primal, k, &mut rng);
            let b = random_cochain(g, ComplexId::Dual, 2 - k, &mut rng);
            let lhs = pairing(&ops.d(k).apply(&a).unwrap(), &b).unwrap();
            let rhs = sign * pairing(&a, &ops.dual_d(2 - k).apply(&b).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1.0), "k={k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn d_of_constants_and_linearity() {
    let g = grid([4, 3, 2], [0.3, 0.5, 0.7]);
    let ops = DoubleComplex::build(g);
    let ones = Cochain::from_values(g, ComplexId::Primal, 0, vec![2.5; g.entity_count(0)]).unwrap();
    assert_eq!(ops.d(0).apply(&ones).unwrap().inf_norm(), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_cochain(g, ComplexId::Primal, 1, &mut rng);
    let b = random_cochain(g, ComplexId::Primal, 1, &mut rng);
    let mut combo = a.scaled(0.3);
    combo.axpy(-1.7, &b);
    let lhs = ops.d(1).apply(&combo).unwrap();
    let mut rhs = ops.d(1).apply(&a).unwrap().scaled(0.3);
    rhs.axpy(-1.7, &ops.d(1).apply(&b).unwrap());
    assert!(lhs.sub(&rhs).inf_norm() < 1e-14);

    // twice d is the zero cochain, exactly
    assert_eq!(ops.d(2).apply(&ops.d(1).apply(&a).unwrap()).unwrap().inf_norm(), 0.0);
}

#[test]
fn d_on_sampled_scalar_matches_analytic_edge_integrals() {
    // d of a sampled 0-cochain is a difference of nodal values, which *is*
    // the exact edge integral of df.
    let g = grid([64, 2, 2], [1.0 / 64.0, 0.5, 0.5]);
    let ops = DoubleComplex::build(g);
    let l = g.lengths()[0];
    let f = |x: [f64; 3]| (2.0 * PI * x[0] / l).sin();
    let c = de_rham_scalar(g, ComplexId::Primal, 0, f);
    let dc = ops.d(0).apply(&c).unwrap();
    let sites = g.num_sites();
    let mut worst = 0.0f64;
    for s in 0..sites {
        let i = s % g.n[0];
        let x0 = i as f64 * g.h[0];
        let exact = f([x0 + g.h[0], 0.0, 0.0]) - f([x0, 0.0, 0.0]);
        worst = worst.max((dc.values[s] - exact).abs());
    }
    assert!(worst < 1e-14, "{worst}");
}

#[test]
fn de_rham_constant_and_zero_fields() {
    let g = grid([3, 4, 5], [0.5, 0.25, 0.2]);
    let c = de_rham_vector(g, ComplexId::Primal, 1, |_| [1.0, 0.0, 0.0]);
    let sites = g.num_sites();
    for s in 0..sites {
        assert_eq!(c.values[s], g.h[0]);
        assert_eq!(c.values[sites + s], 0.0);
        assert_eq!(c.values[2 * sites + s], 0.0);
    }
    let z = de_rham_vector(g, ComplexId::Dual, 2, |_| [0.0; 3]);
    assert_eq!(z.inf_norm(), 0.0);
}

#[test]
fn de_rham_two_form_face_integrals_second_order() {
    // F = sin(2πy/L₂) dx²∧dx³ has the analytic x-face integral
    // h₃ ∫ sin dy over the face's y-extent.
    let err = |nref: usize| {
        let g = grid([2, nref, 2], [0.5, 1.0 / nref as f64, 0.5]);
        let l = g.lengths()[1];
        let c = de_rham_vector(g, ComplexId::Primal, 2, |x| [(2.0 * PI * x[1] / l).sin(), 0.0, 0.0]);
        let k = 2.0 * PI / l;
        let mut worst = 0.0f64;
        for s in 0..g.num_sites() {
            let j = (s / g.n[0]) % g.n[1];
            let y0 = j as f64 * g.h[1];
            let exact = g.h[2] * ((k * y0).cos() - (k * (y0 + g.h[1])).cos()) / k;
            worst = worst.max((c.values[s] - exact).abs());
        }
        // normalize by the face measure so the quadrature error is O(h²)
        worst / (g.h[1] * g.h[2])
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "ratio {}", e1 / e2);
}

#[test]
fn pairing_basis_duality_and_errors() {
    let g = grid([3, 3, 3], [1.0; 3]);
    let mut a = Cochain::zero(g, ComplexId::Primal, 1);
    let mut b = Cochain::zero(g, ComplexId::Dual, 2);
    a.values[5] = 1.0;
    b.values[5] = 1.0;
    assert_eq!(pairing(&a, &b).unwrap(), 1.0);
    assert!(pairing(&a, &a.clone()).is_err());
    let c = Cochain::zero(g, ComplexId::Dual, 1);
    assert!(pairing(&a, &c).is_err());
}

#[test]
fn pairing_converges_to_wedge_integral() {
    // ω = sin(2πx/L) dx¹, η̃ = sin(2πx/L) dx²∧dx³ ⇒ ∫ ω∧η̃ = L₁L₂L₃/2.
    // Cochains carry the *exact* analytic entity integrals here, so the only
    // error is the O(h²) defect of the discrete pairing itself.
    let val = |n: usize| {
        let g = grid([n, 2, 2], [1.0 / n as f64, 0.5, 0.5]);
        let l = g.lengths()[0];
        let k = 2.0 * PI / l;
        let mut w = Cochain::zero(g, ComplexId::Primal, 1);
        let mut e = Cochain::zero(g, ComplexId::Dual, 2);
        for s in 0..g.num_sites() {
            let i = s % g.n[0];
            let x0 = i as f64 * g.h[0];
            // exact ∫ sin over the primal x-edge [x0, x0+h]
            w.values[s] = ((k * x0).cos() - (k * (x0 + g.h[0])).cos()) / k;
            // dual x-face sits at x = x0 + h/2 and is flat in x
            e.values[s] = (k * (x0 + 0.5 * g.h[0])).sin() * g.h[1] * g.h[2];
        }
        pairing(&w, &e).unwrap()
    };
    let exact = 0.5;
    let (e1, e2) = ((val(16) - exact).abs(), (val(32) - exact).abs());
    assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "errors {e1} {e2}");
}

#[test]
fn reconstruct_constant_and_linear_fields() {
    let g = grid([4, 3, 5], [0.5, 0.4, 0.3]);
    let mut c = Cochain::zero(g, ComplexId::Primal, 1);
    for s in 0..g.num_sites() {
        c.values[s] = g.h[0];
    }
    let r = reconstruct_at_centers(&c).unwrap();
    for cell in &r {
        assert!((cell[0] - 1.0).abs() < 1e-15 && cell[1] == 0.0 && cell[2] == 0.0);
    }

    // a = (2 + 3x) dx¹ sampled on edges is exact at cell centers
    let lin = de_rham_vector(g, ComplexId::Primal, 1, |x| [2.0 + 3.0 * x[0], 0.0, 0.0]);
    let r = reconstruct_at_centers(&lin).unwrap();
    for s in 0..g.num_sites() {
        let i = s % g.n[0];
        let xc = (i as f64 + 0.5) * g.h[0];
        assert!((r[s][0] - (2.0 + 3.0 * xc)).abs() < 1e-13);
    }

    // degree 0 and 3 are rejected
    assert!(reconstruct_at_centers(&Cochain::zero(g, ComplexId::Primal, 0)).is_err());
    assert!(reconstruct_at_centers(&Cochain::zero(g, ComplexId::Dual, 3)).is_err());
}

#[test]
fn reconstruct_plane_wave_second_order() {
    let err = |n: usize| {
        let g = grid([n, n, 2], [1.0 / n as f64, 1.0 / n as f64, 0.5]);
        let l = g.lengths();
        let f = |x: [f64; 3]| {
            let p = (2.0 * PI * (x[0] / l[0] + x[1] / l[1])).sin();
            [p, 0.5 * p, 0.0]
        };
        let c = de_rham_vector(g, ComplexId::Dual, 2, f);
        let r = reconstruct_at_centers(&c).unwrap();
        let mut worst = 0.0f64;
        for s in 0..g.num_sites() {
            let (i, j) = (s % g.n[0], (s / g.n[0]) % g.n[1]);
            let x = [(i as f64 + 0.5) * g.h[0], (j as f64 + 0.5) * g.h[1], 0.0];
            let exact = f(x);
            for a in 0..3 {
                worst = worst.max((r[s][a] - exact[a]).abs());
            }
        }
        worst
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "errors {e1} {e2}");
}

#[test]
fn scatter_is_transpose_of_reconstruct() {
    let g = grid([3, 4, 2], [0.3, 0.25, 0.9]);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for complex in [ComplexId::Primal, ComplexId::Dual] {
        for degree in [1usize, 2] {
            let c = random_cochain(g, complex, degree, &mut rng);
            let w: Vec<[f64; 3]> = (0..g.num_sites())
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let r = reconstruct_at_centers(&c).unwrap();
            let lhs: f64 = r.iter().zip(&w).map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).sum();
            let rhs = c.dot(&scatter_from_centers(g, complex, degree, &w));
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
        }
    }
}

#[test]
fn operators_commute_with_grid_translation() {
    let g = grid([4, 3, 5], [0.5, 0.4, 0.3]);
    let ops = DoubleComplex::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let by = [1isize, -2, 3];
    for (complex, degree) in [(ComplexId::Primal, 1usize), (ComplexId::Dual, 0), (ComplexId::Primal, 2)] {
        let c = random_cochain(g, complex, degree, &mut rng);
        let lhs = ops.apply_d(&c.translated(by)).unwrap();
        let rhs = ops.apply_d(&c).unwrap().translated(by);
        assert!(lhs.sub(&rhs).inf_norm() == 0.0);
    }
}

#[test]
fn apply_rejects_mismatched_cochains() {
    let g = grid([3, 3, 3], [1.0; 3]);
    let ops = DoubleComplex::build(g);
    let c = Cochain::zero(g, ComplexId::Dual, 1);
    assert!(ops.d(1).apply(&c).is_err());
}
