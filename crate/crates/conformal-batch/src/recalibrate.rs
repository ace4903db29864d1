//! Post-selection recalibration via effective ranks.
//!
//! The selection rule picks a predictor per point using randomness that is
//! independent of the calibration data given the features; the within-model
//! rank of each calibration point under its selected predictor then behaves
//! as an exchangeable meta-score, and its ceil((1-alpha)(m+1))-th order
//! statistic calibrates the selected predictor at the test point.

use rand::Rng;

use selection_core::{
    ada_minse, exponential_select, minse, sample_selection, Prior, SizeProfile,
};

use crate::model::{ceil_rank, ConformalError, ConformalModel, RankIndex};
use selection_core::PredictionSet;

/// Effective ranks of the calibration points plus the uniform tiebreak keys
/// used to order equal ranks. Keys are drawn once so repeated queries within
/// a run are consistent.
#[derive(Debug, Clone)]
pub struct EffectiveRankSequence {
    pub ranks: Vec<usize>,
    pub tiebreak_keys: Vec<f64>,
}

/// A per-point selection rule: given the features and fresh randomness,
/// returns a predictor index.
pub type Selector<R> = Box<dyn Fn(&[f64], &mut R) -> usize>;

/// For each calibration point i, the rank of its score within the selected
/// model's calibration scores: R_i = #{ j : s_{k_i, j} <= s_{k_i, i} }.
pub fn effective_ranks<R: Rng>(
    models: &[ConformalModel],
    selector: &Selector<R>,
    cal_data: &[(Vec<f64>, f64)],
    rng: &mut R,
) -> EffectiveRankSequence {
    let mut ranks = Vec::with_capacity(cal_data.len());
    let mut tiebreak_keys = Vec::with_capacity(cal_data.len());
    for (x, y) in cal_data {
        let k = selector(x, rng);
        let model = &models[k];
        let s = model.score().evaluate(x, *y);
        ranks.push(model.rank_of(s));
        tiebreak_keys.push(rng.random());
    }
    EffectiveRankSequence { ranks, tiebreak_keys }
}

/// Selects a predictor for the test point and returns its set at the
/// tau_alpha-th order statistic of the effective ranks (equal ranks ordered
/// by the stored tiebreak keys).
pub fn recalibrated_set<R: Rng>(
    models: &[ConformalModel],
    selector: &Selector<R>,
    eff_ranks: &EffectiveRankSequence,
    x_test: &[f64],
    rng: &mut R,
    alpha: f64,
) -> Result<PredictionSet, ConformalError> {
    let m = eff_ranks.ranks.len();
    let tau_alpha = ceil_rank(alpha, m);
    if tau_alpha > m {
        return Err(ConformalError::LevelTooStrict { rank: tau_alpha, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eff_ranks.ranks[i]
            .cmp(&eff_ranks.ranks[j])
            .then(eff_ranks.tiebreak_keys[i].partial_cmp(&eff_ranks.tiebreak_keys[j]).unwrap())
    });
    let threshold_rank = eff_ranks.ranks[order[tau_alpha - 1]].max(1);
    let k = selector(x_test, rng);
    models[k].set_at_rank(x_test, RankIndex(threshold_rank))
}

/// The stable mechanism an auxiliary-data selector applies to the proxy set
/// sizes.
#[derive(Debug, Clone)]
pub enum SelectorMechanism {
    /// Deterministic smallest proxy set (no stability budget).
    ArgMin,
    MinSe { eta: f64, tau: f64 },
    AdaMinSe { alpha: f64, alpha_prime: f64 },
    Exponential { eta: f64 },
}

/// Builds a selection rule from models calibrated on an auxiliary dataset
/// disjoint from the calibration data. The returned closure depends only on
/// the query features, the auxiliary quantiles, and fresh randomness, which
/// is what the recalibration theorem's independence condition requires.
///
/// `alpha_tilde` sets the preliminary level of the proxy sets.
pub fn build_aux_selector<R: Rng>(
    aux_models: Vec<ConformalModel>,
    alpha_tilde: f64,
    mechanism: SelectorMechanism,
) -> Selector<R> {
    let k = aux_models.len();
    assert!(k >= 1, "need at least one model");
    Box::new(move |x: &[f64], rng: &mut R| -> usize {
        let sizes: Vec<f64> = aux_models
            .iter()
            .map(|model| {
                model
                    .split_conformal_set(x, alpha_tilde)
                    .map(|set| {
                        let mu = set.measure();
                        if mu.is_finite() {
                            mu
                        } else {
                            f64::MAX / 1e6
                        }
                    })
                    .unwrap_or(f64::MAX / 1e6)
            })
            .collect();
        if k == 1 {
            return 0;
        }
        match &mechanism {
            SelectorMechanism::ArgMin => {
                let mut best = 0;
                for i in 1..k {
                    if sizes[i] < sizes[best] {
                        best = i;
                    }
                }
                best
            }
            SelectorMechanism::MinSe { eta, tau } => {
                let xi = SizeProfile::new(sizes).expect("aux sizes are nonnegative");
                let d = minse(&xi, &Prior::uniform(k), *eta, *tau).expect("valid MinSE inputs");
                sample_selection(&d, rng)
            }
            SelectorMechanism::AdaMinSe { alpha, alpha_prime } => {
                let xi = SizeProfile::new(sizes).expect("aux sizes are nonnegative");
                let d = ada_minse(&xi, &Prior::uniform(k), *alpha, *alpha_prime)
                    .expect("valid AdaMinSE inputs");
                sample_selection(&d, rng)
            }
            SelectorMechanism::Exponential { eta } => {
                // Normalize by the largest proxy size so the [0, 1] bound holds.
                let scale = sizes.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
                let xi = SizeProfile::with_scale(sizes, scale).expect("positive scale");
                let d = exponential_select(&xi, *eta).expect("normalized sizes in [0,1]");
                sample_selection(&d, rng)
            }
        }
    })
}
