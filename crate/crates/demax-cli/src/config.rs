//! Flat dotted-key configuration files.
//!
//! The format is deliberately minimal for diff-friendly experiment tracking:
//! one `section.key = value` pair per line, `#` comments, whitespace-separated
//! vector components. Every key must be consumed by the parser — unknown keys
//! are validation errors, caught before anything is allocated or written.

use crate::CliError;
use demax_core::constitutive::{ModelSpec, ModelVariant, Units};
use demax_core::GridSpec;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub struct KeyMap {
    entries: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
    /// Raw file bytes, hashed into the diagnostics outputs.
    pub raw: Vec<u8>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl KeyMap {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(raw)
    }

    pub fn parse(raw: Vec<u8>) -> Result<Self, CliError> {
        let text = std::str::from_utf8(&raw)
            .map_err(|_| invalid("config file is not valid UTF-8"))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(invalid(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries, used: Default::default(), raw })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn string(&self, key: &str) -> Result<String, CliError> {
        self.get(key).map(str::to_string).ok_or_else(|| invalid(format!("missing key `{key}`")))
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).map(str::to_string).unwrap_or_else(|| default.to_string())
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.string(key)?.parse().map_err(|_| invalid(format!("`{key}` must be a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| invalid(format!("`{key}` must be a number"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.string(key)?
            .parse()
            .map_err(|_| invalid(format!("`{key}` must be a non-negative integer")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                v.parse().map_err(|_| invalid(format!("`{key}` must be a non-negative integer")))
            }
        }
    }

    fn triple<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<[T; 3]>, CliError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let parts: Vec<T> = v
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| invalid(format!("`{key}` must be three {what}"))))
            .collect::<Result<_, _>>()?;
        let arr: [T; 3] =
            parts.try_into().map_err(|_| invalid(format!("`{key}` must be three {what}")))?;
        Ok(Some(arr))
    }

    pub fn usize3(&self, key: &str) -> Result<[usize; 3], CliError> {
        self.triple(key, "integers")?.ok_or_else(|| invalid(format!("missing key `{key}`")))
    }

    pub fn i64_3_or(&self, key: &str, default: [i64; 3]) -> Result<[i64; 3], CliError> {
        Ok(self.triple(key, "integers")?.unwrap_or(default))
    }

    pub fn f64_3_or(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3], CliError> {
        Ok(self.triple(key, "numbers")?.unwrap_or(default))
    }

    /// Fails on any key the caller never consumed (catches typos).
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        for key in self.entries.keys() {
            if !used.contains(key) {
                return Err(invalid(format!("unknown configuration key `{key}`")));
            }
        }
        Ok(())
    }
}

/// FNV-1a, used to stamp outputs with the hash of the config that made them.
pub fn config_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Midpoint,
    Splitting,
    SingleComplex,
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    PlaneWave { mode: [i64; 3], amplitude: f64, polarization: usize },
    GaussianPulse { center: [f64; 3], width: f64, amplitude: f64, axis: usize },
    FromSnapshot { prefix: PathBuf },
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub csv: String,
    pub csv_every: usize,
    pub snapshot_every: usize,
    pub snapshot_prefix: String,
    pub summary: String,
}

#[derive(Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub metric: [f64; 3],
    pub model: ModelSpec,
    pub integrator: Integrator,
    pub dt: f64,
    pub steps: usize,
    pub tol: f64,
    pub initial: InitialCondition,
    pub output: OutputSpec,
    pub seed: u64,
    pub hash: u64,
}

pub fn parse_grid(map: &KeyMap) -> Result<GridSpec, CliError> {
    let n = map.usize3("grid.n")?;
    // default spacing makes the torus 2π-periodic per axis
    let h = map.f64_3_or(
        "grid.h",
        [
            2.0 * std::f64::consts::PI / n[0].max(1) as f64,
            2.0 * std::f64::consts::PI / n[1].max(1) as f64,
            2.0 * std::f64::consts::PI / n[2].max(1) as f64,
        ],
    )?;
    GridSpec::new(n, h).map_err(|e| invalid(format!("grid: {e}")))
}

pub fn parse_units(map: &KeyMap) -> Result<Units, CliError> {
    Ok(Units {
        c: map.f64_or("units.c", 1.0)?,
        fourpi: map.f64_or("units.fourpi", 4.0 * std::f64::consts::PI)?,
    })
}

pub fn parse_model(map: &KeyMap) -> Result<ModelSpec, CliError> {
    let units = parse_units(map)?;
    let variant = match map.string_or("model.variant", "vacuum").as_str() {
        "vacuum" => ModelVariant::Vacuum,
        "kerr" => ModelVariant::Kerr { chi1: map.f64("model.chi1")?, chi3: map.f64("model.chi3")? },
        "dispersive" | "nonlocal_dispersive" => ModelVariant::NonlocalDispersive {
            alpha: map.f64("model.alpha")?,
            beta: map.f64("model.beta")?,
        },
        "magnetoelectric" => ModelVariant::Magnetoelectric { alpha: map.f64("model.alpha")? },
        other => return Err(invalid(format!("`model.variant`: unknown model `{other}`"))),
    };
    ModelSpec::new(variant, units).map_err(|e| invalid(format!("model: {e}")))
}

fn parse_axis(map: &KeyMap, key: &str) -> Result<usize, CliError> {
    match map.string(key)?.as_str() {
        "x" | "0" => Ok(0),
        "y" | "1" => Ok(1),
        "z" | "2" => Ok(2),
        other => Err(invalid(format!("`{key}` must be one of x/y/z, got `{other}`"))),
    }
}

fn parse_initial(map: &KeyMap) -> Result<InitialCondition, CliError> {
    match map.string_or("initial.kind", "plane_wave").as_str() {
        "plane_wave" => {
            let mode = map.i64_3_or("initial.mode", [1, 0, 0])?;
            let polarization = parse_axis(map, "initial.polarization")?;
            if mode[polarization] != 0 {
                return Err(invalid(format!(
                    "`initial.polarization`: axis {polarization} is not orthogonal to mode {mode:?}"
                )));
            }
            if mode == [0, 0, 0] {
                return Err(invalid("`initial.mode` must be a nonzero mode vector"));
            }
            Ok(InitialCondition::PlaneWave {
                mode,
                amplitude: map.f64_or("initial.amplitude", 1.0)?,
                polarization,
            })
        }
        "gaussian_pulse" => {
            let width = map.f64("initial.width")?;
            if !(width > 0.0) {
                return Err(invalid("`initial.width` must be positive"));
            }
            Ok(InitialCondition::GaussianPulse {
                center: map.f64_3_or("initial.center", [0.0, 0.0, 0.0])?,
                width,
                amplitude: map.f64_or("initial.amplitude", 1.0)?,
                axis: parse_axis(map, "initial.axis")?,
            })
        }
        "from_snapshot" => Ok(InitialCondition::FromSnapshot { prefix: map.string("initial.path")?.into() }),
        other => Err(invalid(format!("`initial.kind`: unknown kind `{other}`"))),
    }
}

/// Output directory, `DEMAX_OUTPUT_DIR` overriding the config.
fn parse_output(map: &KeyMap) -> Result<OutputSpec, CliError> {
    let dir = std::env::var_os("DEMAX_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| map.string_or("output.dir", "out").into());
    Ok(OutputSpec {
        dir,
        csv: map.string_or("output.csv", "diagnostics.csv"),
        csv_every: map.usize_or("output.csv_every", 1)?,
        snapshot_every: map.usize_or("output.snapshot_every", 0)?,
        snapshot_prefix: map.string_or("output.snapshot_prefix", "state"),
        summary: map.string_or("output.summary", "summary.json"),
    })
}

impl RunConfig {
    pub fn from_map(map: &KeyMap) -> Result<Self, CliError> {
        let grid = parse_grid(map)?;
        let metric = map.f64_3_or("metric.g", [1.0, 1.0, 1.0])?;
        if metric.iter().any(|&g| !(g > 0.0)) {
            return Err(invalid("`metric.g` entries must be positive"));
        }
        let model = parse_model(map)?;
        let integrator = match map.string_or("integrator.kind", "midpoint").as_str() {
            "midpoint" => Integrator::Midpoint,
            "splitting" => Integrator::Splitting,
            "single_complex" => Integrator::SingleComplex,
            other => return Err(invalid(format!("`integrator.kind`: unknown integrator `{other}`"))),
        };
        if integrator != Integrator::Midpoint && !model.is_linear() {
            return Err(invalid(
                "`integrator.kind`: splitting and single_complex require a linear model",
            ));
        }
        let dt = map.f64("integrator.dt")?;
        if !(dt > 0.0) {
            return Err(invalid("`integrator.dt` must be positive"));
        }
        let steps = map.usize("integrator.steps")?;
        let tol = map.f64_or("integrator.tol", 1e-12)?;
        if !(tol > 0.0) {
            return Err(invalid("`integrator.tol` must be positive"));
        }
        let cfg = Self {
            grid,
            metric,
            model,
            integrator,
            dt,
            steps,
            tol,
            initial: parse_initial(map)?,
            output: parse_output(map)?,
            seed: map.usize_or("seed", 0)? as u64,
            hash: config_hash(&map.raw),
        };
        map.finish()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_map(&KeyMap::load(path)?)
    }
}
