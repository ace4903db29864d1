//! Online conformal machinery: adaptive conformal inference (ACI) wrappers
//! around online learners, COMA exponential-weights aggregation, and AdaCOMA,
//! which runs the MinSE program with the COMA weights as prior at every step.

pub mod aci;
pub mod coma;
pub mod learners;

pub use aci::{aci_step, AciConformal, AciState};
pub use coma::{
    adacoma_step, coma_aggregate, coma_update, normalized_loss, AdaComaOption, ComaWeights,
    LearningRate,
};
pub use learners::{OnlineLearner, RollingOls, SgdRegressor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error("loss {value} at index {index} is negative or non-finite")]
    InvalidLoss { index: usize, value: f64 },
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),
    #[error("target level must lie in (0, 1), got {0}")]
    InvalidTarget(f64),
    #[error("learning rate must be nonnegative and finite, got {0}")]
    InvalidLearningRate(f64),
    #[error("normalization scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("need at least one expert")]
    NoExperts,
    #[error(transparent)]
    Selection(#[from] selection_core::SelectionError),
}
