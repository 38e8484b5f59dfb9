//! Hot-path kernels: the sparse incidence applications that dominate every
//! time step, the diagonal Hodge maps, the nonlinear constitutive inversion,
//! and a full implicit-midpoint step for end-to-end context.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use demax_core::complex::de_rham_vector;
use demax_core::constitutive::{DBState, EBState, ModelSpec, ModelVariant, Units};
use demax_core::dynamics::{SimState, System};
use demax_core::{Cochain, ComplexId, Constitutive, DoubleComplex, GridSpec, HodgeSuite, MaterialMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 32;

fn grid() -> GridSpec {
    let h = 2.0 * std::f64::consts::PI / N as f64;
    GridSpec::new([N; 3], [h; 3]).unwrap()
}

fn random_cochain(g: GridSpec, degree: usize, rng: &mut ChaCha8Rng) -> Cochain {
    let mut c = Cochain::zero(g, ComplexId::Primal, degree);
    for v in &mut c.values {
        *v = rng.gen_range(-1.0..1.0);
    }
    c
}

fn smooth_state(g: GridSpec) -> EBState {
    let e = de_rham_vector(g, ComplexId::Primal, 1, |x| {
        [0.3 * (x[1] + 2.0 * x[2]).cos(), 0.2 * (x[0] - x[2]).sin(), 0.1 * (x[0] + x[1]).cos()]
    });
    let b = de_rham_vector(g, ComplexId::Primal, 2, |x| {
        [0.2 * (x[1]).sin(), 0.1 * (x[2] - x[0]).cos(), 0.15 * (x[0]).sin()]
    });
    EBState { e, b }
}

fn bench_incidence(c: &mut Criterion) {
    let g = grid();
    let ops = DoubleComplex::build(g);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c1 = random_cochain(g, 1, &mut rng);
    c.bench_function("incidence_d1_curl_32", |b| b.iter(|| ops.d(1).apply(&c1).unwrap()));
}

fn bench_hodge(c: &mut Criterion) {
    let g = grid();
    let stars = HodgeSuite::build(g, MaterialMetric::diagonal([1.2, 0.9, 1.1]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c1 = random_cochain(g, 1, &mut rng);
    c.bench_function("hodge_star1_32", |b| b.iter(|| stars.star(1).apply(&c1).unwrap()));
}

fn bench_kerr_inverse(c: &mut Criterion) {
    let g = grid();
    let model =
        ModelSpec::new(ModelVariant::Kerr { chi1: 0.1, chi3: 0.05 }, Units::default()).unwrap();
    let cons = Constitutive::new(g, MaterialMetric::identity(), model).unwrap();
    let eb = smooth_state(g);
    let db = DBState { dtilde: cons.d_from_e(&eb).unwrap(), b: eb.b };
    c.bench_function("kerr_e_from_db_32", |b| {
        b.iter(|| cons.e_from_db(&db, 1e-12, 100, None).unwrap())
    });
}

fn bench_midpoint_step(c: &mut Criterion) {
    let g = grid();
    let model =
        ModelSpec::new(ModelVariant::Kerr { chi1: 0.1, chi3: 0.05 }, Units::default()).unwrap();
    let cons = Constitutive::new(g, MaterialMetric::identity(), model).unwrap();
    let eb = smooth_state(g);
    let dtilde = cons.d_from_e(&eb).unwrap();
    let state = SimState { dtilde, b: eb.b, t: 0.0 };
    let dt = 0.25 * 2.0 * std::f64::consts::PI / N as f64;
    c.bench_function("midpoint_step_kerr_32", |b| {
        b.iter_batched(
            || System::new(Constitutive::new(g, MaterialMetric::identity(), model).unwrap()),
            |mut sys| sys.step_midpoint(&state, dt, 1e-12).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_incidence, bench_hodge, bench_kerr_inverse, bench_midpoint_step
}
criterion_main!(benches);
