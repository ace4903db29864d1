//! Stable selection among conformal prediction sets.
//!
//! Given the per-predictor set sizes at a query point, the mechanisms in this
//! crate produce a selection (an index or a distribution over indices) whose
//! conditional law is close to a fixed prior, so that the coverage of the
//! individual sets transfers to the selected one at an adjusted level.
//!
//! Mechanisms: Laplace-noise argmin, the exponential mechanism, the MinSE
//! linear program (solved exactly by a greedy fill), its adaptive variant
//! that also optimizes the budget split, plus derandomization by weighted
//! majority vote.

pub mod mechanisms;
pub mod set;
pub mod types;

pub use mechanisms::{
    ada_minse, derandomize, dominance_check, exponential_select, expected_size, laplace_select,
    minse, sample_selection,
};
pub use set::{weighted_majority, Interval, PredictionSet};
pub use types::{BudgetUsed, Prior, SelectionDistribution, SelectionError, SizeProfile, StabilityBudget};

/// Absolute tolerance for simplex-sum checks.
pub const SIMPLEX_TOL: f64 = 1e-10;
/// Absolute tolerance for objective-value comparisons.
pub const OBJECTIVE_TOL: f64 = 1e-9;
/// Absolute tolerance for stability-certificate slack checks.
pub const CERTIFICATE_TOL: f64 = 1e-10;
