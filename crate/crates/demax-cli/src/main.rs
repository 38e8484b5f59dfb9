//! `demax` — command-line front end for the discrete electromagnetics library.
//!
//! Exit codes: 0 success, 2 validation failure (bad config, bad arguments),
//! 3 solver divergence, 4 verification failure.

mod config;
mod dispersion;
mod initial;
mod runcmd;
mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("solver diverged: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "demax", about = "Structure-preserving simulation of macroscopic Maxwell equations", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured system and write diagnostics, snapshots, and a summary
    Run {
        /// Path to a `key = value` config file
        config: PathBuf,
    },
    /// Run the built-in structural self-checks and print a JSON report
    Verify {
        /// Randomized trials per check
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Seed for the randomized trials
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run only the named check
        #[arg(long)]
        check: Option<String>,
    },
    /// Measure numerical dispersion ω(k) against the analytic relation
    Dispersion {
        /// Path to a `key = value` config file
        config: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => runcmd::run(&config),
        Command::Verify { trials, seed, check } => {
            let report = verify::run(trials, seed, check.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.pass {
                Ok(())
            } else {
                let failed: Vec<&str> =
                    report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                Err(CliError::Verification(failed.join(", ")))
            }
        }
        Command::Dispersion { config } => dispersion::run(&config),
    }
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
