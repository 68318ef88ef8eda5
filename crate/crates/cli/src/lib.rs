//! Experiment harness for quadric and biquadratic point counts: loads
//! forms, runs parameter sweeps, compares empirical counts against the
//! predicted main terms, and emits CSV tables plus JSON verdict summaries.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{load_config, load_form_file, CliError, ExperimentConfig, ExperimentKind, Tolerances};
pub use experiment::{run_experiment, write_report};
pub use report::{Report, ReportRow, Verdict};
