//! Batch experiment runner: scenario x method -> RunMetrics over seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use conformal_batch::{
    build_aux_selector, effective_ranks, recalibrated_set, ConformalModel, Score,
    SelectorMechanism,
};
use selection_core::{
    ada_minse, derandomize, exponential_select, laplace_select, minse, sample_selection,
    PredictionSet, Prior, SelectionDistribution, SizeProfile, StabilityBudget,
};

use crate::generators::{
    gen_coin_flips, gen_sin_regression, gen_toy_regression_with_noise, gen_worst_case_oracles,
};
use crate::metrics::RunMetrics;
use crate::predictors::{fit_ridge, heterogeneous_models, knn_residual_scale};
use crate::ExperimentError;

/// Selection methods compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MinSe,
    AdaMinSe,
    Exponential,
    Laplace,
    Derandomized,
    Recalibrated,
    SingleModelBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MinSe => "minse",
            Method::AdaMinSe => "ada_minse",
            Method::Exponential => "exponential",
            Method::Laplace => "laplace",
            Method::Derandomized => "derandomized",
            Method::Recalibrated => "recalibrated",
            Method::SingleModelBaseline => "single_model_baseline",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "minse" => Method::MinSe,
            "ada_minse" => Method::AdaMinSe,
            "exponential" => Method::Exponential,
            "laplace" => Method::Laplace,
            "derandomized" => Method::Derandomized,
            "recalibrated" => Method::Recalibrated,
            "single_model_baseline" => Method::SingleModelBaseline,
            _ => return None,
        })
    }
}

/// Batch scenarios. The abstract scenarios (worst-case oracles, coin flips)
/// produce set profiles directly; the regression scenarios run the full
/// train/calibrate/select pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    WorstCaseOracle { k: usize, n_trials: usize },
    CoinFlip { k: usize, n_trials: usize },
    ToyRegression { n_train: usize, n_cal: usize, n_test: usize, noise_sd: f64 },
    SinRegression { d: usize, k: usize, n_train: usize, m_cal: usize, m_aux: usize, n_test: usize },
}

impl Scenario {
    fn validate(&self) -> Result<(), ExperimentError> {
        let ok = match *self {
            Scenario::WorstCaseOracle { k, n_trials } => k >= 2 && n_trials >= 1,
            Scenario::CoinFlip { k, n_trials } => k >= 1 && n_trials >= 1,
            Scenario::ToyRegression { n_train, n_cal, n_test, noise_sd } => {
                n_train >= 10 && n_cal >= 1 && n_test >= 1 && noise_sd > 0.0
            }
            Scenario::SinRegression { d, k, n_train, m_cal, m_aux, n_test } => {
                d >= 1 && k >= 1 && n_train >= k * 3 && m_cal >= 1 && m_aux >= 1 && n_test >= 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ExperimentError::BadScenario(format!("{self:?}")))
        }
    }
}

/// The base level the K individual sets must be built at so that the method's
/// post-selection guarantee lands on `budget.alpha`: (alpha - tau) e^{-eta}
/// for the eta-stable methods, halved first for the derandomized variant,
/// e^{-2 eta} for the exponential mechanism (which is 2 eta-stable), and the
/// nominal level for the methods that need no adjustment.
pub fn adjusted_base_level(method: Method, budget: &StabilityBudget) -> f64 {
    let (alpha, eta, tau) = (budget.alpha, budget.eta, budget.tau);
    match method {
        Method::MinSe => (alpha - tau) * (-eta).exp(),
        Method::AdaMinSe => budget.alpha_prime.expect("AdaMinSE requires alpha_prime"),
        Method::Exponential => alpha * (-2.0 * eta).exp(),
        Method::Laplace => alpha * (-eta).exp(),
        Method::Derandomized => (alpha / 2.0 - tau) * (-eta).exp(),
        Method::Recalibrated | Method::SingleModelBaseline => alpha,
    }
}

/// Caps infinite set measures at a large finite stand-in so they can enter a
/// size profile (an unbounded set is always the largest candidate).
fn finite_sizes(sets: &[PredictionSet]) -> Vec<f64> {
    sets.iter()
        .map(|s| {
            let m = s.measure();
            if m.is_finite() {
                m
            } else {
                1e9
            }
        })
        .collect()
}

/// The outcome of one selection: either a distribution over the K sets or a
/// single concrete set (sampled index or derandomized combination).
enum Selected {
    Dist(SelectionDistribution),
    Set(PredictionSet),
}

fn select(
    method: Method,
    sets: &[PredictionSet],
    budget: &StabilityBudget,
    rng: &mut ChaCha12Rng,
) -> Result<Selected, ExperimentError> {
    let k = sets.len();
    let sizes = finite_sizes(sets);
    let scale = sizes.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let prior = Prior::uniform(k);
    Ok(match method {
        Method::MinSe => {
            let xi = SizeProfile::new(sizes)?;
            Selected::Dist(minse(&xi, &prior, budget.eta, budget.tau)?)
        }
        Method::AdaMinSe => {
            let xi = SizeProfile::new(sizes)?;
            let alpha_prime = budget.alpha_prime.expect("AdaMinSE requires alpha_prime");
            Selected::Dist(ada_minse(&xi, &prior, budget.alpha, alpha_prime)?)
        }
        Method::Exponential => {
            let xi = SizeProfile::with_scale(sizes, scale)?;
            Selected::Dist(exponential_select(&xi, budget.eta)?)
        }
        Method::Laplace => {
            let xi = SizeProfile::with_scale(sizes, scale)?;
            let i = laplace_select(&xi, budget.eta, rng)?;
            Selected::Set(sets[i].clone())
        }
        Method::Derandomized => {
            let xi = SizeProfile::new(sizes)?;
            let dist = minse(&xi, &prior, budget.eta, budget.tau)?;
            Selected::Set(derandomize(&dist, sets))
        }
        Method::SingleModelBaseline => Selected::Set(sets[0].clone()),
        Method::Recalibrated => {
            return Err(ExperimentError::BadScenario(
                "recalibrated method needs a regression scenario with aux data".into(),
            ))
        }
    })
}

/// Runs one scenario/method combination over the given seeds, in parallel,
/// and aggregates coverage and mean selected-set length.
pub fn run_batch_scenario(
    scenario: &Scenario,
    method: Method,
    budget: &StabilityBudget,
    seeds: &[u64],
) -> Result<RunMetrics, ExperimentError> {
    scenario.validate()?;
    if seeds.is_empty() {
        return Err(ExperimentError::BadScenario("empty seed list".into()));
    }
    let per_seed: Result<Vec<SeedResult>, ExperimentError> = seeds
        .par_iter()
        .map(|&seed| run_one_seed(scenario, method, budget, seed))
        .collect();
    let per_seed = per_seed?;
    let coverage: Vec<f64> = per_seed.iter().map(|r| r.coverage).collect();
    let length: Vec<f64> = per_seed.iter().map(|r| r.length).collect();
    let ind_lengths = average_columns(per_seed.iter().map(|r| &r.individual_lengths));
    let ind_coverages = average_columns(per_seed.iter().map(|r| &r.individual_coverages));
    Ok(RunMetrics::aggregate(coverage, length, ind_lengths, ind_coverages))
}

fn average_columns<'a>(rows: impl Iterator<Item = &'a Vec<f64>> + Clone) -> Vec<f64> {
    let k = rows.clone().map(|r| r.len()).max().unwrap_or(0);
    if k == 0 {
        return Vec::new();
    }
    let mut sums = vec![0.0; k];
    let mut n = 0usize;
    for row in rows {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
        n += 1;
    }
    sums.iter().map(|s| s / n as f64).collect()
}

/// Per-seed result of one scenario run.
struct SeedResult {
    coverage: f64,
    length: f64,
    individual_lengths: Vec<f64>,
    individual_coverages: Vec<f64>,
}

fn run_one_seed(
    scenario: &Scenario,
    method: Method,
    budget: &StabilityBudget,
    seed: u64,
) -> Result<SeedResult, ExperimentError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match *scenario {
        Scenario::WorstCaseOracle { k, n_trials } => {
            run_abstract(n_trials, method, budget, &mut rng, |rng| {
                let (sets, _) = gen_worst_case_oracles(k, rng);
                sets
            })
        }
        Scenario::CoinFlip { k, n_trials } => {
            let base = adjusted_base_level(method, budget);
            run_abstract(n_trials, method, budget, &mut rng, |rng| {
                gen_coin_flips(k, base, rng)
            })
        }
        Scenario::ToyRegression { n_train, n_cal, n_test, noise_sd } => {
            run_toy_regression(n_train, n_cal, n_test, noise_sd, method, budget, &mut rng)
        }
        Scenario::SinRegression { d, k, n_train, m_cal, m_aux, n_test } => {
            run_sin_regression(d, k, n_train, m_cal, m_aux, n_test, method, budget, &mut rng)
        }
    }
}

/// Abstract profiles: the label is an arbitrary interior point of the label
/// space [0, 1]; a set covers iff it contains it.
fn run_abstract(
    n_trials: usize,
    method: Method,
    budget: &StabilityBudget,
    rng: &mut ChaCha12Rng,
    mut gen: impl FnMut(&mut ChaCha12Rng) -> Vec<PredictionSet>,
) -> Result<SeedResult, ExperimentError> {
    let label = 0.5;
    let (mut covered, mut total_len) = (0.0, 0.0);
    for _ in 0..n_trials {
        let sets = gen(rng);
        match select(method, &sets, budget, rng)? {
            Selected::Dist(dist) => {
                let i = sample_selection(&dist, rng);
                if sets[i].contains(label) {
                    covered += 1.0;
                }
                total_len += sets[i].measure();
            }
            Selected::Set(set) => {
                if set.contains(label) {
                    covered += 1.0;
                }
                total_len += set.measure();
            }
        }
    }
    Ok(SeedResult {
        coverage: covered / n_trials as f64,
        length: total_len / n_trials as f64,
        individual_lengths: Vec::new(),
        individual_coverages: Vec::new(),
    })
}

/// Regression pipeline shared by the toy and sin scenarios once the models
/// are calibrated: per test point, form the K sets, select, and score
/// coverage by expected selection mass for distribution methods.
fn run_regression_tests(
    models: &[ConformalModel],
    test: &[(Vec<f64>, f64)],
    base_level: f64,
    method: Method,
    budget: &StabilityBudget,
    rng: &mut ChaCha12Rng,
) -> Result<SeedResult, ExperimentError> {
    let k = models.len();
    let (mut covered, mut total_len) = (0.0, 0.0);
    let mut individual = vec![0.0; k];
    let mut individual_cov = vec![0.0; k];
    for (x, y) in test {
        let sets: Vec<PredictionSet> = models
            .iter()
            .map(|m| m.split_conformal_set(x, base_level))
            .collect::<Result<_, _>>()?;
        for ((acc, cov), s) in individual.iter_mut().zip(&mut individual_cov).zip(&sets) {
            *acc += s.measure();
            if s.contains(*y) {
                *cov += 1.0;
            }
        }
        match select(method, &sets, budget, rng)? {
            Selected::Dist(dist) => {
                // Expected coverage and length under the selection law.
                for (p, s) in dist.probabilities().iter().zip(&sets) {
                    if s.contains(*y) {
                        covered += p;
                    }
                    total_len += p * s.measure();
                }
            }
            Selected::Set(set) => {
                if set.contains(*y) {
                    covered += 1.0;
                }
                total_len += set.measure();
            }
        }
    }
    let n = test.len() as f64;
    for (acc, cov) in individual.iter_mut().zip(&mut individual_cov) {
        *acc /= n;
        *cov /= n;
    }
    Ok(SeedResult {
        coverage: covered / n,
        length: total_len / n,
        individual_lengths: individual,
        individual_coverages: individual_cov,
    })
}

fn run_toy_regression(
    n_train: usize,
    n_cal: usize,
    n_test: usize,
    noise_sd: f64,
    method: Method,
    budget: &StabilityBudget,
    rng: &mut ChaCha12Rng,
) -> Result<SeedResult, ExperimentError> {
    if method == Method::Recalibrated {
        return Err(ExperimentError::BadScenario(
            "toy regression has no aux split; use the sin scenario for recalibration".into(),
        ));
    }
    let train = gen_toy_regression_with_noise(n_train, noise_sd, rng);
    let cal = gen_toy_regression_with_noise(n_cal, noise_sd, rng);
    let test = gen_toy_regression_with_noise(n_test, noise_sd, rng);
    // Locally adaptive scores: each fixed predictor gets a k-NN residual
    // scale fitted on the training split, so its intervals are narrow on the
    // half-space where it is accurate.
    let knn_k = (n_train / 20).max(5);
    let models: Vec<ConformalModel> = crate::generators::toy_predictors()
        .into_iter()
        .map(|f| {
            let g = knn_residual_scale(train.clone(), f.clone(), knn_k)?;
            Ok(ConformalModel::calibrate(Score::ScaledResidual { f, g }, &cal)?)
        })
        .collect::<Result<_, ExperimentError>>()?;
    let base = adjusted_base_level(method, budget);
    run_regression_tests(&models, &test, base, method, budget, rng)
}

#[allow(clippy::too_many_arguments)]
fn run_sin_regression(
    d: usize,
    k: usize,
    n_train: usize,
    m_cal: usize,
    m_aux: usize,
    n_test: usize,
    method: Method,
    budget: &StabilityBudget,
    rng: &mut ChaCha12Rng,
) -> Result<SeedResult, ExperimentError> {
    let train = gen_sin_regression(n_train, d, rng);
    let cal = gen_sin_regression(m_cal, d, rng);
    let aux = gen_sin_regression(m_aux, d, rng);
    let test = gen_sin_regression(n_test, d, rng);

    if method == Method::SingleModelBaseline {
        let f = fit_ridge(&train, 1e-3)?;
        let g = knn_residual_scale(train.clone(), f.clone(), (n_train / 20).max(3))?;
        let model = ConformalModel::calibrate(Score::ScaledResidual { f, g }, &cal)?;
        return run_regression_tests(
            std::slice::from_ref(&model),
            &test,
            budget.alpha,
            method,
            budget,
            rng,
        );
    }

    let pairs = heterogeneous_models(&train, k)?;
    let calibrated: Vec<ConformalModel> = pairs
        .iter()
        .map(|(f, g)| {
            ConformalModel::calibrate(Score::ScaledResidual { f: f.clone(), g: g.clone() }, &cal)
        })
        .collect::<Result<_, _>>()?;

    if method == Method::Recalibrated {
        let aux_models: Vec<ConformalModel> = pairs
            .iter()
            .map(|(f, g)| {
                ConformalModel::calibrate(
                    Score::ScaledResidual { f: f.clone(), g: g.clone() },
                    &aux,
                )
            })
            .collect::<Result<_, _>>()?;
        let selector = build_aux_selector(
            aux_models,
            budget.alpha,
            SelectorMechanism::MinSe { eta: budget.eta, tau: budget.tau },
        );
        let eff = effective_ranks(&calibrated, &selector, &cal, rng);
        let (mut covered, mut total_len) = (0.0, 0.0);
        for (x, y) in &test {
            let set = recalibrated_set(&calibrated, &selector, &eff, x, rng, budget.alpha)?;
            if set.contains(*y) {
                covered += 1.0;
            }
            total_len += set.measure();
        }
        let n = test.len() as f64;
        return Ok(SeedResult {
            coverage: covered / n,
            length: total_len / n,
            individual_lengths: Vec::new(),
            individual_coverages: Vec::new(),
        });
    }

    let base = adjusted_base_level(method, budget);
    run_regression_tests(&calibrated, &test, base, method, budget, rng)
}

/// Per-group coverage of a two-group scenario under MinSE selection.
#[derive(Debug, Clone)]
pub struct GroupCoverage {
    /// Mean coverage per group, averaged over seeds.
    pub group_coverage: Vec<f64>,
    /// Per-seed per-group coverages.
    pub per_seed: Vec<Vec<f64>>,
}

/// Two-group conditional scenario: the group is the sign of the (single)
/// feature, the base sets are calibrated per group (group-conditionally
/// valid at `budget.alpha`), and MinSE(eta, tau) selects between the two
/// asymmetric predictors f(x) = x and f(x) = -x. The guarantee to compare
/// against is per-group coverage >= 1 - alpha e^eta - tau.
pub fn run_conditional_scenario(
    n_cal_per_group: usize,
    n_test_per_group: usize,
    budget: &StabilityBudget,
    seeds: &[u64],
) -> Result<GroupCoverage, ExperimentError> {
    if seeds.is_empty() || n_cal_per_group < 10 || n_test_per_group < 1 {
        return Err(ExperimentError::BadScenario("conditional scenario parameters".into()));
    }
    let per_seed: Result<Vec<Vec<f64>>, ExperimentError> = seeds
        .par_iter()
        .map(|&seed| conditional_one_seed(n_cal_per_group, n_test_per_group, budget, seed))
        .collect();
    let per_seed = per_seed?;
    let mut group_coverage = vec![0.0; 2];
    for row in &per_seed {
        for (acc, c) in group_coverage.iter_mut().zip(row) {
            *acc += c;
        }
    }
    for acc in &mut group_coverage {
        *acc /= per_seed.len() as f64;
    }
    Ok(GroupCoverage { group_coverage, per_seed })
}

fn conditional_one_seed(
    n_cal: usize,
    n_test: usize,
    budget: &StabilityBudget,
    seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draw_group = |g: usize, rng: &mut ChaCha12Rng| {
        let mag = rng.random::<f64>();
        let x = if g == 0 { -mag } else { mag };
        let y = x.abs() + 0.25 * crate::generators::normal(rng);
        (vec![x], y)
    };
    let predictors = crate::generators::toy_predictors();
    let prior = Prior::uniform(predictors.len());
    let mut coverages = Vec::with_capacity(2);
    // Per-group calibration: each model gets a group-specific quantile, so
    // the base sets are valid conditionally on the group.
    for g in 0..2 {
        let cal: Vec<(Vec<f64>, f64)> = (0..n_cal).map(|_| draw_group(g, &mut rng)).collect();
        let models: Vec<ConformalModel> = predictors
            .iter()
            .map(|f| ConformalModel::calibrate(Score::AbsResidual { f: f.clone() }, &cal))
            .collect::<Result<_, _>>()?;
        let mut covered = 0.0;
        for _ in 0..n_test {
            let (x, y) = draw_group(g, &mut rng);
            let sets: Vec<PredictionSet> = models
                .iter()
                .map(|m| m.split_conformal_set(&x, budget.alpha))
                .collect::<Result<_, _>>()?;
            let xi = SizeProfile::new(finite_sizes(&sets))?;
            let dist = minse(&xi, &prior, budget.eta, budget.tau)?;
            for (p, s) in dist.probabilities().iter().zip(&sets) {
                if s.contains(y) {
                    covered += p;
                }
            }
        }
        coverages.push(covered / n_test as f64);
    }
    Ok(coverages)
}
