//! Online experiment runner: ARMA stream, K ACI-wrapped learners, COMA and
//! AdaCOMA side by side, with per-step trace records for the CLI emitters.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use conformal_online::{
    adacoma_step, coma_aggregate, coma_update, normalized_loss, AciConformal, AdaComaOption,
    ComaWeights, LearningRate, OnlineLearner, RollingOls, SgdRegressor,
};
use selection_core::PredictionSet;

use crate::generators::gen_arma_stream;
use crate::metrics::mean_and_se;
use crate::ExperimentError;

/// One row of the per-step trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineTraceRow {
    pub t: usize,
    pub chosen: Option<usize>,
    pub covered: bool,
    /// Selected-set length; infinite sets are recorded as -1.
    pub length: f64,
    pub weights: Vec<f64>,
    pub p_star: Vec<f64>,
}

/// Aggregated outcome of an online run.
#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub coverage_mean: f64,
    pub coverage_se: f64,
    pub length_mean: f64,
    pub per_seed_coverage: Vec<f64>,
    /// Trace of the first seed (traces for all seeds would be unwieldy).
    pub first_seed_trace: Vec<OnlineTraceRow>,
}

/// Parameters of the online scenario.
#[derive(Debug, Clone, Copy)]
pub struct OnlineConfig {
    pub t_len: usize,
    pub ar: f64,
    pub ma: f64,
    pub noise_sd: f64,
    /// Base ACI target level alpha' for each learner.
    pub alpha_prime: f64,
    /// ACI step size.
    pub gamma: f64,
    /// Stability budget used by AdaCOMA at every step.
    pub eta: f64,
    pub tau: f64,
    /// Loss normalization scale L.
    pub scale: f64,
    pub option: AdaComaOption,
}

/// Runs the online scenario over seeds in parallel (one stream per seed).
pub fn run_online_scenario(
    cfg: &OnlineConfig,
    seeds: &[u64],
) -> Result<OnlineOutcome, ExperimentError> {
    if seeds.is_empty() || cfg.t_len == 0 {
        return Err(ExperimentError::BadScenario("online scenario needs seeds and T >= 1".into()));
    }
    let runs: Result<Vec<Vec<OnlineTraceRow>>, ExperimentError> =
        seeds.par_iter().map(|&seed| run_one_stream(cfg, seed)).collect();
    let runs = runs?;
    let per_seed_coverage: Vec<f64> = runs
        .iter()
        .map(|t| t.iter().filter(|r| r.covered).count() as f64 / t.len() as f64)
        .collect();
    let (coverage_mean, coverage_se) = mean_and_se(&per_seed_coverage);
    let finite_lengths: Vec<f64> = runs
        .iter()
        .flat_map(|t| t.iter().filter(|r| r.length >= 0.0).map(|r| r.length))
        .collect();
    let length_mean =
        finite_lengths.iter().sum::<f64>() / (finite_lengths.len().max(1)) as f64;
    Ok(OnlineOutcome {
        coverage_mean,
        coverage_se,
        length_mean,
        per_seed_coverage,
        first_seed_trace: runs.into_iter().next().unwrap(),
    })
}

fn run_one_stream(cfg: &OnlineConfig, seed: u64) -> Result<Vec<OnlineTraceRow>, ExperimentError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let stream = gen_arma_stream(cfg.t_len, cfg.ar, cfg.ma, cfg.noise_sd, 3, &mut rng)?;
    let mut learners: Vec<Box<dyn OnlineLearner>> = vec![
        Box::new(SgdRegressor::new(3, 0.01, 0.0)),
        Box::new(RollingOls::new(50, 1e-6)),
        Box::new(RollingOls::new(100, 1e-6)),
    ];
    let k = learners.len();
    let mut wrapped: Vec<AciConformal<Box<dyn OnlineLearner>>> = learners
        .drain(..)
        .map(|l| AciConformal::new(l, cfg.alpha_prime, cfg.gamma, 100, 100))
        .collect::<Result<_, _>>()?;
    let mut weights = ComaWeights::new(k, LearningRate::AdaHedge)?;
    let mut trace = Vec::with_capacity(cfg.t_len);
    for (t, (x, y)) in stream.iter().enumerate() {
        let sets: Vec<PredictionSet> = wrapped.iter().map(|w| w.predict(x)).collect();
        let (set, dist, chosen) =
            adacoma_step(&weights, &sets, cfg.eta, cfg.tau, cfg.scale, cfg.option, &mut rng)?;
        let covered = set.contains(*y);
        let measure = set.measure();
        trace.push(OnlineTraceRow {
            t,
            chosen,
            covered,
            length: if measure.is_finite() { measure } else { -1.0 },
            weights: weights.weights().to_vec(),
            p_star: dist.probabilities().to_vec(),
        });
        let losses: Vec<f64> = sets.iter().map(|s| normalized_loss(s, cfg.scale)).collect();
        for w in &mut wrapped {
            w.observe(x, *y);
        }
        coma_update(&mut weights, &losses)?;
    }
    Ok(trace)
}

/// Plain COMA baseline on the same protocol (weighted-majority combination,
/// no stability budget); used by the CLI for a side-by-side summary.
pub fn run_coma_baseline(cfg: &OnlineConfig, seed: u64) -> Result<Vec<OnlineTraceRow>, ExperimentError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let stream = gen_arma_stream(cfg.t_len, cfg.ar, cfg.ma, cfg.noise_sd, 3, &mut rng)?;
    let mut wrapped: Vec<AciConformal<Box<dyn OnlineLearner>>> = vec![
        Box::new(SgdRegressor::new(3, 0.01, 0.0)) as Box<dyn OnlineLearner>,
        Box::new(RollingOls::new(50, 1e-6)),
        Box::new(RollingOls::new(100, 1e-6)),
    ]
    .into_iter()
    .map(|l| AciConformal::new(l, cfg.alpha_prime, cfg.gamma, 100, 100))
    .collect::<Result<_, _>>()?;
    let mut weights = ComaWeights::new(wrapped.len(), LearningRate::AdaHedge)?;
    let mut trace = Vec::with_capacity(cfg.t_len);
    for (t, (x, y)) in stream.iter().enumerate() {
        let sets: Vec<PredictionSet> = wrapped.iter().map(|w| w.predict(x)).collect();
        let set = coma_aggregate(&weights, &sets);
        let measure = set.measure();
        trace.push(OnlineTraceRow {
            t,
            chosen: None,
            covered: set.contains(*y),
            length: if measure.is_finite() { measure } else { -1.0 },
            weights: weights.weights().to_vec(),
            p_star: weights.weights().to_vec(),
        });
        let losses: Vec<f64> = sets.iter().map(|s| normalized_loss(s, cfg.scale)).collect();
        for w in &mut wrapped {
            w.observe(x, *y);
        }
        coma_update(&mut weights, &losses)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(option: AdaComaOption) -> OnlineConfig {
        OnlineConfig {
            t_len: 2_000,
            ar: 0.9,
            ma: 0.1,
            noise_sd: 1.0,
            alpha_prime: 0.04,
            gamma: 0.02,
            eta: 2.0f64.ln(),
            tau: 0.02,
            scale: 20.0,
            option,
        }
    }

    #[test]
    fn online_runner_is_deterministic() {
        let cfg = config(AdaComaOption::Sampled);
        let a = run_online_scenario(&cfg, &[3, 4]).unwrap();
        let b = run_online_scenario(&cfg, &[3, 4]).unwrap();
        assert_eq!(a.first_seed_trace, b.first_seed_trace);
        assert_eq!(a.per_seed_coverage, b.per_seed_coverage);
    }

    #[test]
    fn sampled_option_reports_indices_combined_does_not() {
        let sampled = run_online_scenario(&config(AdaComaOption::Sampled), &[5]).unwrap();
        assert!(sampled.first_seed_trace.iter().all(|r| r.chosen.is_some()));
        let combined = run_online_scenario(&config(AdaComaOption::Combined), &[5]).unwrap();
        assert!(combined.first_seed_trace.iter().all(|r| r.chosen.is_none()));
    }

    #[test]
    fn coma_baseline_covers_generously() {
        let trace = run_coma_baseline(&config(AdaComaOption::Combined), 6).unwrap();
        let cov = trace.iter().filter(|r| r.covered).count() as f64 / trace.len() as f64;
        assert!(cov >= 0.85, "COMA coverage {cov}");
    }
}
