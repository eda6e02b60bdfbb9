use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use negdep::depcheck::CheckConfig;
use negdep::{Backend, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub sign: f64,
    pub mass: f64,
    pub lp: f64,
    pub jm: f64,
    pub nsd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Caps {
    pub grid: u128,
    pub upper_sets: usize,
    pub nsd_grid: usize,
    pub exact_lp_nonzeros: usize,
    pub lp_variables: usize,
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<String>,
    /// Requested mode; `None` means taken from the input file.
    pub requested_mode: Option<Backend>,
    pub number_mode: Backend,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub caps: Caps,
    pub output: Option<PathBuf>,
    pub params: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            grid_cap: self.caps.grid,
            upper_set_cap: self.caps.upper_sets,
            nsd_grid_cap: self.caps.nsd_grid,
            exact_lp_nonzeros: self.caps.exact_lp_nonzeros,
            nsd_tol: self.tolerances.nsd,
        }
    }

    pub fn tolerances_for<T: negdep::Scalar>(&mut self) {
        self.number_mode = T::BACKEND;
        self.tolerances.sign = T::sign_tol().to_f();
        self.tolerances.mass = T::mass_tol().to_f();
        self.tolerances.lp = T::lp_tol().to_f();
        self.tolerances.jm = T::jm_tol().to_f();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Negative,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    timestamp: u64,
    outcome: Outcome,
    result: Value,
}

pub fn emit(config: &RunConfig, outcome: Outcome, result: Value) -> Result<()> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let text = serde_json::to_string_pretty(&Report { config, timestamp, outcome, result })?;
    match &config.output {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| negdep::Error::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| negdep::Error::Invalid(e.to_string()))
        }
    }
}
