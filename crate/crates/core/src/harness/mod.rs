//! Experiment orchestration: TOML configs, seeded trials, parameter sweeps,
//! the estimator comparison and plot-ready output.
//!
//! Trial `t` of an experiment with seed `s` uses `derive_seed(s, t)` and
//! splits it into independent streams for the truth, the design and the
//! oracle (see [`crate::seed`]), so any single trial can be rerun alone.
//!
//! Plot files have one row per sweep cell. The header lists the axis names
//! followed by the measured columns ([`SWEEP_COLUMNS`] for sweeps,
//! [`COMPARISON_COLUMNS`] for the estimator comparison). CSV and JSON carry
//! the same numbers; JSON is `{"header": [...], "rows": [[...], ...]}`.

mod config;
mod experiment;
mod sweep;

use thiserror::Error;

pub use config::{ExperimentConfig, OutputFormat, PipelineChoice, TruthSpec};
pub use experiment::{generate_truth, run_experiment, run_trial, write_reports, TrialReport};
pub use sweep::{
    emit_plot_data, estimator_comparison, summarize, sweep, ComparisonOptions, PlotTable,
    SweepAxis, SweepCell, SweepResult, COMPARISON_COLUMNS, SWEEP_COLUMNS,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("nothing to emit: the result has no cells")]
    EmptyResult,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Gmm(#[from] crate::gmm::GmmError),
    #[error(transparent)]
    Recovery(#[from] crate::recovery::RecoveryError),
}
