//! Split conformal prediction with rank-parameterized sets and the
//! effective-rank recalibration that restores coverage after selecting among
//! multiple predictors.

pub mod model;
pub mod recalibrate;

pub use model::{
    ceil_rank, ConformalError, ConformalModel, LabelGrid, Predictor, RankIndex, Score,
};
pub use recalibrate::{
    build_aux_selector, effective_ranks, recalibrated_set, EffectiveRankSequence,
    SelectorMechanism,
};
