use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qst_core::noise::dephasing_rate;

use crate::CliError;

pub const OUT_DIR_ENV: &str = "QST_OUT_DIR";

/// Resolved experiment settings. Units: MHz, ns, µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub eta: f64,
    pub t_ramp: f64,
    pub coupling_cap: f64,
    pub dt: f64,
    pub t1: f64,
    pub t2: f64,
    pub n_steps: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eta: 200.0,
            t_ramp: 2.0,
            coupling_cap: 55.0,
            dt: 0.001,
            t1: 60.0,
            t2: 60.0,
            n_steps: 200,
            output_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub t_ramp: Option<f64>,
    pub coupling_cap: Option<f64>,
    pub dt: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub n_steps: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        let o = overrides.clone();
        if let Some(v) = o.eta {
            cfg.eta = v;
        }
        if let Some(v) = o.t_ramp {
            cfg.t_ramp = v;
        }
        if let Some(v) = o.coupling_cap {
            cfg.coupling_cap = v;
        }
        if let Some(v) = o.dt {
            cfg.dt = v;
        }
        if let Some(v) = o.t1 {
            cfg.t1 = v;
        }
        if let Some(v) = o.t2 {
            cfg.t2 = v;
        }
        if let Some(v) = o.n_steps {
            cfg.n_steps = v;
        }
        if let Some(v) = o.output_dir {
            cfg.output_dir = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [("eta", self.eta), ("coupling_cap", self.coupling_cap), ("dt", self.dt), ("t1", self.t1), ("t2", self.t2)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.t_ramp >= 0.0) || !self.t_ramp.is_finite() {
            return Err(CliError::Config(format!("t_ramp must be >= 0, got {}", self.t_ramp)));
        }
        if self.n_steps < 3 {
            return Err(CliError::Config(format!("n_steps must be at least 3 for the fits, got {}", self.n_steps)));
        }
        dephasing_rate(self.t1, self.t2).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}
