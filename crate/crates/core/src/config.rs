//! Run configuration, read from TOML and overridable from the command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tolerance names understood by the subcommands, with their defaults.
pub const TOLERANCE_DEFAULTS: [(&str, f64); 4] = [("equilibria", 1e-12), ("picard", 1e-13), ("ode_rtol", 1e-12), ("ode_atol", 1e-13)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridOverrides,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    /// Outer radius of computed profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_step: Option<f64>,
    /// Inner cutoffs of the Morse ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Interval `[a, b]` of the convergence report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    /// Outer radius of the Emden comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
}

fn default_radius() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl RunConfig {
    pub fn new(dimension: u32) -> Self {
        Self {
            dimension,
            lambda: None,
            radius: default_radius(),
            index: None,
            tolerances: BTreeMap::new(),
            output_dir: default_output_dir(),
            grid: GridOverrides::default(),
        }
    }

    /// Fill in missing tolerances and check ranges.
    pub fn validated(mut self) -> Result<Self> {
        for (name, value) in TOLERANCE_DEFAULTS {
            self.tolerances.entry(name.to_string()).or_insert(value);
        }
        if self.dimension < 3 {
            return Err(Error::Validation(format!("dimension must be at least 3, got {}", self.dimension)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Validation(format!("radius must be positive, got {}", self.radius)));
        }
        if self.index == Some(0) {
            return Err(Error::Validation("index starts at 1".into()));
        }
        for (name, &value) in &self.tolerances {
            if !TOLERANCE_DEFAULTS.iter().any(|(k, _)| k == name) {
                return Err(Error::Validation(format!("unknown tolerance '{name}'")));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Validation(format!("tolerance '{name}' must be positive, got {value}")));
            }
        }
        let g = &self.grid;
        for (name, v) in [("r_max", g.r_max), ("gamma", g.gamma), ("gamma_min", g.gamma_min), ("gamma_max", g.gamma_max), ("gamma_step", g.gamma_step), ("rho_max", g.rho_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Validation(format!("grid.{name} must be positive, got {v}")));
                }
            }
        }
        if let (Some(a), Some(b)) = (g.gamma_min, g.gamma_max) {
            if a > b {
                return Err(Error::Validation(format!("gamma_min = {a} exceeds gamma_max = {b}")));
            }
        }
        if let Some((a, b)) = g.interval {
            if !(0.0 < a && a < b) {
                return Err(Error::Validation(format!("interval must satisfy 0 < a < b, got [{a}, {b}]")));
            }
        }
        if let Some(eps) = &g.epsilons {
            if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e < self.radius)) {
                return Err(Error::Validation("epsilons must be nonempty and lie in (0, radius)".into()));
            }
        }
        Ok(self)
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| TOLERANCE_DEFAULTS.iter().find(|(k, _)| *k == name).map(|(_, v)| *v))
            .expect("known tolerance name")
    }

    pub fn require_lambda(&self) -> Result<f64> {
        self.lambda.ok_or_else(|| Error::Validation("this subcommand needs lambda".into()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Hex SHA-256 of the subcommand name and the serialized config, truncated to 16 digits.
    pub fn run_hash(&self, subcommand: &str) -> String {
        let mut h = Sha256::new();
        h.update(subcommand.as_bytes());
        h.update([0u8]);
        h.update(self.to_toml().as_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `<output_dir>/<subcommand>-<hash>`.
    pub fn run_dir(&self, subcommand: &str) -> PathBuf {
        self.output_dir.join(format!("{subcommand}-{}", self.run_hash(subcommand)))
    }
}

/// Parse a TOML document; unknown keys are rejected and defaults applied.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;
    cfg.validated()
}
