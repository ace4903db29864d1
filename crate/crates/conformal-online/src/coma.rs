//! COMA exponential-weights aggregation and AdaCOMA.
//!
//! COMA keeps weights w^{(t)} proportional to exp(-gamma_{t-1} * cumulative
//! interval loss) and aggregates the K current sets by weighted majority.
//! AdaCOMA instead feeds the weights as the prior of the MinSE program at
//! every step, trading a stability budget (eta, tau) for sharper sets.

use rand::Rng;

use selection_core::{
    derandomize, minse, sample_selection, weighted_majority, PredictionSet, Prior,
    SelectionDistribution, SizeProfile,
};

use crate::OnlineError;

/// Learning-rate schedule for the exponential weights.
#[derive(Debug, Clone, Copy)]
pub enum LearningRate {
    /// Fixed-rate Hedge.
    Hedge { eta: f64 },
    /// Parameter-free schedule eta_t = ln(K) / Delta_{t-1}, where Delta is
    /// the cumulative mixability gap; Delta = 0 (startup, or all experts
    /// tied) means uniform weights over the cumulative-loss minimizers.
    AdaHedge,
}

/// Exponential weights over K experts driven by interval losses.
#[derive(Debug, Clone)]
pub struct ComaWeights {
    cumulative_loss: Vec<f64>,
    w: Vec<f64>,
    rate: LearningRate,
    /// Cumulative mixability gap (AdaHedge only).
    delta: f64,
}

impl ComaWeights {
    pub fn new(k: usize, rate: LearningRate) -> Result<Self, OnlineError> {
        if k == 0 {
            return Err(OnlineError::NoExperts);
        }
        if let LearningRate::Hedge { eta } = rate {
            if !(eta >= 0.0) || !eta.is_finite() {
                return Err(OnlineError::InvalidLearningRate(eta));
            }
        }
        Ok(Self {
            cumulative_loss: vec![0.0; k],
            w: vec![1.0 / k as f64; k],
            rate,
            delta: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cumulative_loss
    }

    /// The learning rate the next weight computation will use; `None` means
    /// the startup convention (effectively infinite) is in force.
    pub fn current_rate(&self) -> Option<f64> {
        match self.rate {
            LearningRate::Hedge { eta } => Some(eta),
            LearningRate::AdaHedge => {
                if self.delta > 0.0 {
                    Some((self.w.len() as f64).ln() / self.delta)
                } else {
                    None
                }
            }
        }
    }

    fn recompute(&mut self) {
        match self.current_rate() {
            Some(eta) => {
                let min = self.cumulative_loss.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut sum = 0.0;
                for (w, &l) in self.w.iter_mut().zip(&self.cumulative_loss) {
                    *w = (-eta * (l - min)).exp();
                    sum += *w;
                }
                for w in &mut self.w {
                    *w /= sum;
                }
            }
            None => {
                // Infinite rate: uniform over the cumulative-loss minimizers.
                let min = self.cumulative_loss.iter().cloned().fold(f64::INFINITY, f64::min);
                let argmins: Vec<bool> =
                    self.cumulative_loss.iter().map(|&l| l == min).collect();
                let count = argmins.iter().filter(|&&b| b).count() as f64;
                for (w, is_min) in self.w.iter_mut().zip(argmins) {
                    *w = if is_min { 1.0 / count } else { 0.0 };
                }
            }
        }
    }
}

/// Accumulates one round of losses and recomputes the weights. For AdaHedge
/// the mixability gap of the round (Hedge loss minus mix loss) is added to
/// the rate accumulator first, using the pre-update weights.
pub fn coma_update(weights: &mut ComaWeights, losses: &[f64]) -> Result<(), OnlineError> {
    let k = weights.w.len();
    if losses.len() != k {
        return Err(OnlineError::DimensionMismatch { expected: k, got: losses.len() });
    }
    for (index, &value) in losses.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(OnlineError::InvalidLoss { index, value });
        }
    }
    if matches!(weights.rate, LearningRate::AdaHedge) {
        let hedge_loss: f64 = weights.w.iter().zip(losses).map(|(w, l)| w * l).sum();
        let mix_loss = match weights.current_rate() {
            Some(eta) if eta > 0.0 => {
                // -(1/eta) ln sum_i w_i exp(-eta l_i), shifted for stability.
                let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
                let z: f64 = weights
                    .w
                    .iter()
                    .zip(losses)
                    .map(|(w, l)| w * (-eta * (l - min)).exp())
                    .sum();
                min - z.ln() / eta
            }
            _ => {
                // Infinite rate: the mix loss is the increment of the minimum
                // cumulative loss.
                let before =
                    weights.cumulative_loss.iter().cloned().fold(f64::INFINITY, f64::min);
                let after = weights
                    .cumulative_loss
                    .iter()
                    .zip(losses)
                    .map(|(cl, l)| cl + l)
                    .fold(f64::INFINITY, f64::min);
                after - before
            }
        };
        weights.delta += (hedge_loss - mix_loss).max(0.0);
    }
    for (cl, &l) in weights.cumulative_loss.iter_mut().zip(losses) {
        *cl += l;
    }
    weights.recompute();
    Ok(())
}

/// The interval loss entering the weight update: the set's measure divided by
/// the run's normalization scale; an unbounded set costs the full unit.
pub fn normalized_loss(set: &PredictionSet, scale: f64) -> f64 {
    let m = set.measure();
    if m.is_finite() {
        m / scale
    } else {
        1.0
    }
}

/// COMA's combined set {y : sum_i w_i 1{y in C_i} >= 1/2}.
pub fn coma_aggregate(weights: &ComaWeights, sets: &[PredictionSet]) -> PredictionSet {
    assert_eq!(weights.len(), sets.len(), "weight/set count mismatch");
    let pairs: Vec<(f64, &PredictionSet)> =
        weights.w.iter().copied().zip(sets.iter()).collect();
    weighted_majority(&pairs, 0.0)
}

/// How AdaCOMA turns the per-step MinSE distribution into an output set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaComaOption {
    /// Weighted-majority combination under p*.
    Combined,
    /// A single index sampled from p*.
    Sampled,
}

/// One AdaCOMA step: runs MinSE over the normalized set sizes with the
/// current weights as prior, then combines (Option 1) or samples (Option 2).
/// The returned index is `Some` only for the sampled option. The caller is
/// expected to reveal the label afterwards and feed the per-set losses back
/// through [`coma_update`].
pub fn adacoma_step<R: Rng + ?Sized>(
    weights: &ComaWeights,
    sets: &[PredictionSet],
    eta: f64,
    tau: f64,
    scale: f64,
    option: AdaComaOption,
    rng: &mut R,
) -> Result<(PredictionSet, SelectionDistribution, Option<usize>), OnlineError> {
    let k = weights.len();
    if sets.len() != k {
        return Err(OnlineError::DimensionMismatch { expected: k, got: sets.len() });
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(OnlineError::InvalidScale(scale));
    }
    let sizes: Vec<f64> = sets.iter().map(|s| normalized_loss(s, scale)).collect();
    let xi = SizeProfile::new(sizes)?;
    // Renormalize so the prior meets its strict simplex tolerance.
    let sum: f64 = weights.w.iter().sum();
    let prior = Prior::new(weights.w.iter().map(|w| w / sum).collect())?;
    let dist = minse(&xi, &prior, eta, tau)?;
    match option {
        AdaComaOption::Combined => {
            let set = derandomize(&dist, sets);
            Ok((set, dist, None))
        }
        AdaComaOption::Sampled => {
            let i = sample_selection(&dist, rng);
            Ok((sets[i].clone(), dist, Some(i)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn simplex_gap(w: &[f64]) -> f64 {
        (w.iter().sum::<f64>() - 1.0).abs()
    }

    #[test]
    fn initial_weights_are_uniform() {
        let w = ComaWeights::new(4, LearningRate::AdaHedge).unwrap();
        assert_eq!(w.weights(), &[0.25; 4]);
    }

    #[test]
    fn hedge_zero_rate_stays_uniform() {
        let mut w = ComaWeights::new(3, LearningRate::Hedge { eta: 0.0 }).unwrap();
        coma_update(&mut w, &[5.0, 0.0, 2.0]).unwrap();
        coma_update(&mut w, &[0.0, 9.0, 1.0]).unwrap();
        for &wi in w.weights() {
            assert!((wi - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hedge_two_step_closed_form() {
        let eta = 0.7;
        let mut w = ComaWeights::new(2, LearningRate::Hedge { eta }).unwrap();
        coma_update(&mut w, &[1.0, 0.0]).unwrap();
        coma_update(&mut w, &[1.0, 0.0]).unwrap();
        // w = softmax(-eta * [2, 0])
        let z = (-eta * 2.0f64).exp() + 1.0;
        assert!((w.weights()[0] - (-eta * 2.0f64).exp() / z).abs() < 1e-15);
        assert!((w.weights()[1] - 1.0 / z).abs() < 1e-15);
    }

    #[test]
    fn adahedge_startup_then_positive_simplex_weights() {
        let mut w = ComaWeights::new(3, LearningRate::AdaHedge).unwrap();
        // Tied round: still uniform, gap accumulator untouched.
        coma_update(&mut w, &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(w.current_rate(), None);
        assert_eq!(w.weights(), &[1.0 / 3.0; 3]);
        // Differentiated rounds: finite rate, strictly positive weights.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let losses: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            coma_update(&mut w, &losses).unwrap();
            assert!(simplex_gap(w.weights()) < 1e-10);
            assert!(w.weights().iter().all(|&wi| wi > 0.0));
        }
        assert!(w.current_rate().unwrap() > 0.0);
    }

    #[test]
    fn adahedge_prefers_lower_loss_expert() {
        let mut w = ComaWeights::new(2, LearningRate::AdaHedge).unwrap();
        for _ in 0..100 {
            coma_update(&mut w, &[1.0, 0.1]).unwrap();
        }
        assert!(w.weights()[1] > 0.9, "weights {:?}", w.weights());
    }

    #[test]
    fn negative_loss_rejected() {
        let mut w = ComaWeights::new(2, LearningRate::AdaHedge).unwrap();
        match coma_update(&mut w, &[0.1, -0.2]) {
            Err(OnlineError::InvalidLoss { index: 1, .. }) => {}
            other => panic!("expected InvalidLoss, got {other:?}"),
        }
    }

    #[test]
    fn aggregate_point_mass_returns_that_set() {
        let mut w = ComaWeights::new(2, LearningRate::Hedge { eta: 50.0 }).unwrap();
        coma_update(&mut w, &[10.0, 0.0]).unwrap();
        let sets = [PredictionSet::interval(0.0, 1.0), PredictionSet::interval(4.0, 5.0)];
        // Weight on expert 1 is ~1; the aggregate is its set.
        assert_eq!(coma_aggregate(&w, &sets), sets[1]);
    }

    #[test]
    fn aggregate_disjoint_halves_keeps_both_under_closed_convention() {
        let w = ComaWeights::new(2, LearningRate::AdaHedge).unwrap();
        let sets = [PredictionSet::interval(0.0, 1.0), PredictionSet::interval(2.0, 3.0)];
        let out = coma_aggregate(&w, &sets);
        // Each set carries weight exactly 1/2, which meets the >= threshold.
        assert!(out.contains(0.5) && out.contains(2.5));
        assert!(!out.contains(1.5));
    }

    #[test]
    fn adacoma_zero_budget_reduces_to_coma() {
        let mut w = ComaWeights::new(3, LearningRate::AdaHedge).unwrap();
        coma_update(&mut w, &[0.3, 0.1, 0.7]).unwrap();
        let sets = [
            PredictionSet::interval(0.0, 2.0),
            PredictionSet::interval(1.0, 2.5),
            PredictionSet::interval(-1.0, 0.5),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (set, dist, idx) =
            adacoma_step(&w, &sets, 0.0, 0.0, 1.0, AdaComaOption::Combined, &mut rng).unwrap();
        for (p, wi) in dist.probabilities().iter().zip(w.weights()) {
            assert!((p - wi).abs() < 1e-12);
        }
        assert_eq!(set, coma_aggregate(&w, &sets));
        assert_eq!(idx, None);
    }

    #[test]
    fn adacoma_argmin_budget_picks_smallest_set() {
        let w = ComaWeights::new(3, LearningRate::AdaHedge).unwrap();
        let sets = [
            PredictionSet::interval(0.0, 2.0),
            PredictionSet::interval(0.0, 0.5),
            PredictionSet::interval(0.0, 1.0),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        // e^eta = K with uniform prior concentrates all mass on the argmin.
        let eta = 3.0f64.ln();
        for _ in 0..20 {
            let (set, dist, idx) =
                adacoma_step(&w, &sets, eta, 0.0, 2.0, AdaComaOption::Sampled, &mut rng).unwrap();
            assert_eq!(idx, Some(1));
            assert_eq!(set, sets[1]);
            assert!((dist.probabilities()[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adacoma_full_set_counts_as_unit_loss() {
        let w = ComaWeights::new(2, LearningRate::AdaHedge).unwrap();
        let sets = [PredictionSet::full(), PredictionSet::interval(0.0, 0.4)];
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let (_, dist, idx) =
            adacoma_step(&w, &sets, 2.0f64.ln(), 0.0, 2.0, AdaComaOption::Sampled, &mut rng)
                .unwrap();
        // Normalized sizes are (1.0, 0.2): the bounded set wins outright.
        assert_eq!(idx, Some(1));
        assert!((dist.probabilities()[1] - 1.0).abs() < 1e-12);
    }
}
