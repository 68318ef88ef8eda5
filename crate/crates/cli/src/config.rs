//! Experiment configuration: JSON schema, validation, and form loading.
//!
//! A config names a form file, an experiment kind, a sweep of parameter
//! values, a seed, budgets, and tolerances. Validation happens before any
//! computation or output, so a bad config never leaves partial artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bqc_core::archimedean::ArchError;
use bqc_core::counting::CountError;
use bqc_core::expsums::ExpSumError;
use bqc_core::forms::{parse_form, Form, FormError};
use bqc_core::padic::PadicError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("form error: {0}")]
    Form(#[from] FormError),
    #[error("count error: {0}")]
    Count(#[from] CountError),
    #[error("exponential sum error: {0}")]
    ExpSum(#[from] ExpSumError),
    #[error("local density error: {0}")]
    Padic(#[from] PadicError),
    #[error("archimedean error: {0}")]
    Arch(#[from] ArchError),
}

impl CliError {
    /// Everything that prevents a run from producing a report is a usage or
    /// configuration problem. Tolerance failures are not errors; they are
    /// failing verdicts in an otherwise successful report.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

/// What an experiment verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyQuadricAsymptotic,
    VerifyBiquadraticSigma,
    ThinSet,
    ExpsumAudit,
    DensityAudit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyQuadricAsymptotic => "verify-quadric-asymptotic",
            ExperimentKind::VerifyBiquadraticSigma => "verify-biquadratic-sigma",
            ExperimentKind::ThinSet => "thin-set",
            ExperimentKind::ExpsumAudit => "expsum-audit",
            ExperimentKind::DensityAudit => "density-audit",
        }
    }
}

/// Pass thresholds, overridable per config. The defaults match the checks
/// the test suite runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Final-ratio window: |empirical/predicted - 1| at the largest sweep value.
    pub ratio: f64,
    /// Allowed deviation of a fitted growth exponent from its target.
    pub exponent: f64,
    /// Additive slack on dyadic log-log slope ceilings.
    pub slope_slack: f64,
    /// A series is stabilized when |last term| <= stabilization * max(|sum|, 1).
    pub stabilization: f64,
    /// Cross-route gaps must be within tail_factor * (sum of tail bounds).
    pub tail_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ratio: 0.1,
            exponent: 0.1,
            slope_slack: 0.3,
            stabilization: 0.05,
            tail_factor: 1.0,
        }
    }
}

fn default_budget() -> u64 {
    bqc_core::DEFAULT_BUDGET
}

/// One experiment: a form, a kind, a sweep, and the knobs the kind needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub form: PathBuf,
    pub kind: ExperimentKind,
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub q_max: Option<u64>,
    #[serde(default)]
    pub p_max: Option<u64>,
    #[serde(default)]
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.sweep.is_empty() {
            return Err(CliError::Config("sweep must be nonempty".into()));
        }
        for w in self.sweep.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CliError::Config(format!(
                    "sweep must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &v in &self.sweep {
            if !v.is_finite() || v < 1.0 {
                return Err(CliError::Config(format!("sweep values must be finite and >= 1, got {v}")));
            }
        }
        if self.budget == 0 {
            return Err(CliError::Config("budget must be positive".into()));
        }
        if self.samples == Some(0) {
            return Err(CliError::Config("samples must be positive".into()));
        }
        if matches!(
            self.kind,
            ExperimentKind::VerifyQuadricAsymptotic
                | ExperimentKind::VerifyBiquadraticSigma
                | ExperimentKind::DensityAudit
        ) {
            for &v in &self.sweep {
                if v.fract() != 0.0 {
                    return Err(CliError::Config(format!(
                        "{} sweeps over integers, got {v}",
                        self.kind.name()
                    )));
                }
            }
        }
        if let Some(deltas) = &self.deltas {
            if deltas.is_empty() {
                return Err(CliError::Config("deltas must be nonempty".into()));
            }
            for w in deltas.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(CliError::Config("deltas must be strictly decreasing".into()));
                }
            }
            if deltas.iter().any(|&d| !(d > 0.0)) {
                return Err(CliError::Config("deltas must be positive".into()));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("ratio", t.ratio),
            ("exponent", t.exponent),
            ("slope_slack", t.slope_slack),
            ("stabilization", t.stabilization),
            ("tail_factor", t.tail_factor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a form file, either kind, with schema diagnostics.
pub fn load_form_file(path: &Path) -> Result<Form, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_form(&text)?)
}

/// Resolves a form path relative to the directory of the config file.
pub fn resolve_form_path(cfg_path: &Path, form: &Path) -> PathBuf {
    if form.is_absolute() {
        form.to_path_buf()
    } else {
        cfg_path.parent().unwrap_or(Path::new(".")).join(form)
    }
}

/// Key=value parameter string for report rows, in key order, without commas
/// so it stays a single CSV field.
pub fn params_string(pairs: &[(&str, String)]) -> String {
    let map: BTreeMap<&str, &String> = pairs.iter().map(|(k, v)| (*k, v)).collect();
    map.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}
