//! Initial states. Everything here constructs (d̃², b²) pairs whose Gauss
//! constraints vanish exactly: plane waves keep the polarization orthogonal
//! to the wavevector, pulses derive b from a vector potential, and snapshots
//! are trusted as-is.

use crate::config::{InitialCondition, RunConfig};
use crate::CliError;
use demax_core::complex::de_rham_vector;
use demax_core::constitutive::EBState;
use demax_core::dynamics::SimState;
use demax_core::snapshot::read_snapshot;
use demax_core::{Cochain, ComplexId, Constitutive, DoubleComplex};
use std::f64::consts::PI;

pub fn build_state(cfg: &RunConfig, cons: &Constitutive) -> Result<SimState, CliError> {
    let g = cons.grid();
    match &cfg.initial {
        InitialCondition::PlaneWave { mode, amplitude, polarization } => {
            let l = g.lengths();
            let k = [
                2.0 * PI * mode[0] as f64 / l[0],
                2.0 * PI * mode[1] as f64 / l[1],
                2.0 * PI * mode[2] as f64 / l[2],
            ];
            let (p, a) = (*polarization, *amplitude);
            let e = de_rham_vector(g, ComplexId::Primal, 1, move |x| {
                let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                let mut v = [0.0; 3];
                v[p] = a * phase.cos();
                v
            });
            let eb = EBState { e, b: Cochain::zero(g, ComplexId::Primal, 2) };
            let dtilde = cons.d_from_e(&eb).map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(SimState { dtilde, b: eb.b, t: 0.0 })
        }
        InitialCondition::GaussianPulse { center, width, amplitude, axis } => {
            // b = d₁(vector potential), solenoidal by construction
            let (c, w, a, ax) = (*center, *width, *amplitude, *axis);
            let l = g.lengths();
            let pot = de_rham_vector(g, ComplexId::Primal, 1, move |x| {
                let mut r2 = 0.0;
                for i in 0..3 {
                    // nearest periodic image
                    let mut d = (x[i] - c[i]).rem_euclid(l[i]);
                    if d > 0.5 * l[i] {
                        d -= l[i];
                    }
                    r2 += d * d;
                }
                let mut v = [0.0; 3];
                v[ax] = a * (-0.5 * r2 / (w * w)).exp();
                v
            });
            let ops = DoubleComplex::build(g);
            let b = ops.d(1).apply(&pot).map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(SimState { dtilde: Cochain::zero(g, ComplexId::Dual, 2), b, t: 0.0 })
        }
        InitialCondition::FromSnapshot { prefix } => {
            let load = |suffix: &str| -> Result<(Cochain, f64), CliError> {
                let mut os = prefix.as_os_str().to_owned();
                os.push(suffix);
                read_snapshot(std::path::Path::new(&os))
                    .map_err(|e| CliError::Validation(format!("snapshot {suffix}: {e}")))
            };
            let (dtilde, td) = load(".d.snap")?;
            let (b, tb) = load(".b.snap")?;
            if dtilde.grid != g || b.grid != g {
                return Err(CliError::Validation(
                    "snapshot grid does not match `grid.n`/`grid.h`".into(),
                ));
            }
            if (dtilde.complex, dtilde.degree) != (ComplexId::Dual, 2)
                || (b.complex, b.degree) != (ComplexId::Primal, 2)
            {
                return Err(CliError::Validation("snapshot fields have wrong degrees".into()));
            }
            if td != tb {
                return Err(CliError::Validation("snapshot pair disagrees on time".into()));
            }
            Ok(SimState { dtilde, b, t: td })
        }
    }
}
