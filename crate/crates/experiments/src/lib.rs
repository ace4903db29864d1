//! Scenario generators, simple base predictors, and experiment runners for
//! the selection and recalibration pipelines, at desk scale.

pub mod batch;
pub mod data;
pub mod generators;
pub mod metrics;
pub mod online;
pub mod predictors;

pub use batch::{run_batch_scenario, run_conditional_scenario, GroupCoverage, Method, Scenario};
pub use data::{load_csv_dataset, parse_csv_dataset};
pub use generators::{
    gen_arma_stream, gen_coin_flips, gen_sin_regression, gen_toy_regression,
    gen_toy_regression_with_noise, gen_worst_case_oracles, toy_predictors,
};
pub use metrics::RunMetrics;
pub use online::{run_online_scenario, OnlineOutcome, OnlineTraceRow};
pub use predictors::{fit_knn, fit_ridge, heterogeneous_models, knn_residual_scale};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("AR coefficient {0} is not stationary (|ar| must be < 1)")]
    NonStationary(f64),
    #[error("training data is empty")]
    EmptyTrainingData,
    #[error("invalid scenario parameter: {0}")]
    BadScenario(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv field {field} on line {line} is not a number")]
    BadCsvField { line: usize, field: usize },
    #[error("dataset needs a header plus at least one row with >= 2 columns")]
    BadCsvShape,
    #[error(transparent)]
    Selection(#[from] selection_core::SelectionError),
    #[error(transparent)]
    Conformal(#[from] conformal_batch::ConformalError),
    #[error(transparent)]
    Online(#[from] conformal_online::OnlineError),
}
