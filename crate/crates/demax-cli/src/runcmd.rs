//! The `run` subcommand: validate, integrate, and emit diagnostics.

use crate::config::{Integrator, RunConfig};
use crate::{initial, CliError};
use demax_core::constitutive::ModelSpec;
use demax_core::dynamics::{SimState, StepStats, System};
use demax_core::snapshot::write_snapshot;
use demax_core::{Constitutive, CoreError, MaterialMetric};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct Summary {
    config_hash: String,
    seed: u64,
    steps: usize,
    dt: f64,
    t_final: f64,
    hamiltonian_initial: f64,
    hamiltonian_final: f64,
    energy_drift_rel: f64,
    casimir_drift_max: f64,
    fixed_point_iters: usize,
    constitutive_iters: usize,
}

fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::SolverDiverged { iterations, residual } => CliError::Solver(format!(
            "no convergence after {iterations} iterations (residual {residual:.3e})"
        )),
        other => CliError::Validation(other.to_string()),
    }
}

fn snapshot_pair(dir: &Path, name: &str, s: &SimState) -> Result<(), CliError> {
    write_snapshot(&dir.join(format!("{name}.d.snap")), &s.dtilde, s.t).map_err(core_err)?;
    write_snapshot(&dir.join(format!("{name}.b.snap")), &s.b, s.t).map_err(core_err)?;
    Ok(())
}

pub fn run(config_path: &PathBuf) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;

    // all validation happens before any artifact is created
    let metric = MaterialMetric::diagonal(cfg.metric)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let model = ModelSpec::new(cfg.model.variant, cfg.model.units)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let cons = Constitutive::new(cfg.grid, metric, model)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut sys = System::new(cons);
    let mut s = initial::build_state(&cfg, sys.constitutive())?;

    let out = &cfg.output;
    std::fs::create_dir_all(&out.dir)?;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(out.dir.join(&out.csv))?);
    writeln!(csv, "# config_hash={:016x}", cfg.hash)?;
    writeln!(csv, "step,t,hamiltonian,casimir_d,casimir_b,fixed_point_iters,constitutive_iters")?;

    let h0 = sys.hamiltonian(&s).map_err(core_err)?;
    let (c0d, c0b) = sys.casimirs(&s).map_err(core_err)?;
    let mut casimir_drift = 0.0f64;
    let mut totals = StepStats::default();

    let write_row = |csv: &mut dyn Write,
                         sys: &mut System,
                         s: &SimState,
                         step: usize,
                         stats: StepStats,
                         drift: &mut f64|
     -> Result<(), CliError> {
        let h = sys.hamiltonian(s).map_err(core_err)?;
        let (cd, cb) = sys.casimirs(s).map_err(core_err)?;
        *drift = drift.max((cd - c0d).abs()).max((cb - c0b).abs());
        writeln!(
            csv,
            "{step},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            s.t, h, cd, cb, stats.fixed_point_iters, stats.constitutive_iters
        )?;
        Ok(())
    };

    write_row(&mut csv, &mut sys, &s, 0, StepStats::default(), &mut casimir_drift)?;

    for step in 1..=cfg.steps {
        let stats = match cfg.integrator {
            Integrator::Midpoint => {
                let (next, stats) = sys.step_midpoint(&s, cfg.dt, cfg.tol).map_err(core_err)?;
                s = next;
                stats
            }
            Integrator::Splitting => {
                s = sys.step_splitting_linear(&s, cfg.dt).map_err(core_err)?;
                StepStats::default()
            }
            Integrator::SingleComplex => {
                s = sys.step_single_complex(&s, cfg.dt).map_err(core_err)?;
                StepStats::default()
            }
        };
        totals.fixed_point_iters += stats.fixed_point_iters;
        totals.constitutive_iters += stats.constitutive_iters;
        if step % out.csv_every.max(1) == 0 || step == cfg.steps {
            write_row(&mut csv, &mut sys, &s, step, stats, &mut casimir_drift)?;
        }
        if out.snapshot_every > 0 && step % out.snapshot_every == 0 {
            snapshot_pair(&out.dir, &format!("{}_{step:06}", out.snapshot_prefix), &s)?;
        }
    }
    csv.flush()?;
    snapshot_pair(&out.dir, &format!("{}_final", out.snapshot_prefix), &s)?;

    let hf = sys.hamiltonian(&s).map_err(core_err)?;
    let summary = Summary {
        config_hash: format!("{:016x}", cfg.hash),
        seed: cfg.seed,
        steps: cfg.steps,
        dt: cfg.dt,
        t_final: s.t,
        hamiltonian_initial: h0,
        hamiltonian_final: hf,
        energy_drift_rel: (hf - h0).abs() / h0.abs().max(f64::MIN_POSITIVE),
        casimir_drift_max: casimir_drift,
        fixed_point_iters: totals.fixed_point_iters,
        constitutive_iters: totals.constitutive_iters,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(out.dir.join(&out.summary), json + "\n")?;
    Ok(())
}
