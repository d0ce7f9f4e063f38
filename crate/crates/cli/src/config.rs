//! Run configuration: one JSON file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use screenequil::{Environment64, QuadOptions, Setting, SolveOptions, Suite, VerifyOptions};

use crate::CliError;

/// The shipped running example.
pub const RUNNING_EXAMPLE: &str = include_str!("../../../configs/running.json");

/// Smallest accepted type grid.
pub const MIN_GAMMA_POINTS: usize = 101;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: Environment64,
    #[serde(default = "default_gamma_points")]
    pub gamma_points: usize,
    #[serde(default = "default_fee_tol")]
    pub fee_tol: f64,
    #[serde(default)]
    pub quadrature: QuadOptions,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_settings")]
    pub settings: Vec<String>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_verify_sigmas")]
    pub verify_sigmas: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_oracle_types")]
    pub oracle_types: usize,
    #[serde(default = "default_gamma_points")]
    pub envelope_points: usize,
    #[serde(default = "default_suite")]
    pub suite: String,
}

fn default_gamma_points() -> usize {
    201
}
fn default_fee_tol() -> f64 {
    1e-8
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_settings() -> Vec<String> {
    ["duopoly", "spot", "exclusive"].map(String::from).to_vec()
}
fn default_sigmas() -> Vec<f64> {
    vec![1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
}
fn default_verify_sigmas() -> Vec<f64> {
    vec![0.05]
}
fn default_grid() -> usize {
    200
}
fn default_oracle_types() -> usize {
    21
}
fn default_suite() -> String {
    "all".into()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub settings: Vec<String>,
    pub sigmas: Vec<f64>,
    pub gamma_points: Option<usize>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub suite: Option<String>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

impl RunConfig {
    /// Parses a config; errors carry the line and column or the field at fault.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let msg = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m);
            CliError::Config(format!("{origin}: line {}, column {}: {msg}", e.line(), e.column()))
        })?;
        cfg.validate().map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{origin}: {m}")),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
            None => Self::parse(RUNNING_EXAMPLE, "running example"),
        }
    }

    pub fn apply(mut self, o: Overrides) -> Result<Self, CliError> {
        if !o.settings.is_empty() {
            self.settings = o.settings;
        }
        if !o.sigmas.is_empty() {
            self.sigmas = o.sigmas;
        }
        if let Some(n) = o.gamma_points {
            self.gamma_points = n;
        }
        if let Some(n) = o.grid {
            self.grid = n;
        }
        if let Some(p) = o.out {
            self.output = p;
        }
        if let Some(s) = o.suite {
            self.suite = s;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.gamma_points < MIN_GAMMA_POINTS {
            return Err(invalid(
                "gamma_points",
                format!("must be at least {MIN_GAMMA_POINTS}, got {}", self.gamma_points),
            ));
        }
        if self.envelope_points < 2 {
            return Err(invalid("envelope_points", "must be at least 2"));
        }
        if !(self.fee_tol > 0.0 && self.fee_tol.is_finite()) {
            return Err(invalid("fee_tol", "must be positive"));
        }
        let q = &self.quadrature;
        if !(q.rel_tol > 0.0 && q.abs_tol >= 0.0 && q.max_intervals > 0) {
            return Err(invalid(
                "quadrature",
                "tolerances must be positive and max_intervals nonzero",
            ));
        }
        if self.grid < 100 {
            return Err(invalid("grid", format!("must be at least 100, got {}", self.grid)));
        }
        if self.oracle_types < 2 {
            return Err(invalid("oracle_types", "must be at least 2"));
        }
        for (field, list) in [("sigmas", &self.sigmas), ("verify_sigmas", &self.verify_sigmas)] {
            if let Some(s) = list.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(invalid(field, format!("sigma must be positive, got {s}")));
            }
        }
        self.setting_list()?;
        self.suite()?;
        Ok(())
    }

    pub fn setting_list(&self) -> Result<Vec<Setting>, CliError> {
        self.settings
            .iter()
            .map(|s| s.parse::<Setting>().map_err(|e| invalid("settings", e)))
            .collect()
    }

    pub fn suite(&self) -> Result<Suite, CliError> {
        self.suite.parse().map_err(|e| invalid("suite", e))
    }

    pub fn env(&self) -> Environment64 {
        self.environment.clone().with_quadrature(self.quadrature)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            gamma_points: self.gamma_points,
            fee_tol: self.fee_tol,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            grid: self.grid,
            types: self.oracle_types,
            envelope_points: self.envelope_points,
            sigmas: self.verify_sigmas.clone(),
        }
    }
}
