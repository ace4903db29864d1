//! Monte-Carlo and hand-computed checks for calibration, rank-parameterized
//! sets, and the effective-rank recalibration pipeline.

use std::sync::Arc;

use conformal_batch::{
    build_aux_selector, ceil_rank, effective_ranks, recalibrated_set, ConformalError,
    ConformalModel, Predictor, RankIndex, Score, SelectorMechanism,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; good enough for test data generation.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn linear_predictor(w: f64, b: f64) -> Predictor {
    Arc::new(move |x: &[f64]| w * x[0] + b)
}

#[test]
fn calibration_quantile_order_statistic() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let m = 10_000;
    let data: Vec<(Vec<f64>, f64)> = (0..m).map(|_| (vec![0.0], rng.random::<f64>())).collect();
    let model = ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 0.0) }, &data)
        .unwrap();
    let r = ceil_rank(0.1, m);
    let q = model.cal_scores()[r - 1];
    assert!((q - 0.9).abs() < 0.02, "quantile {q}");
}

#[test]
fn split_conformal_marginal_coverage() {
    // Exchangeable synthetic data: the classical guarantee puts mean coverage
    // in [1 - alpha, 1 - alpha + 1/(m+1)].
    let alpha = 0.1;
    let m = 500;
    let n_test = 2000;
    let seeds = 50;
    let mut coverages = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(100 + seed);
        let mut draw = |rng: &mut ChaCha12Rng| {
            let x = rng.random::<f64>() * 2.0 - 1.0;
            let y = x + 0.3 * normal(rng);
            (vec![x], y)
        };
        let cal: Vec<(Vec<f64>, f64)> = (0..m).map(|_| draw(&mut rng)).collect();
        let model =
            ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(1.0, 0.0) }, &cal)
                .unwrap();
        let mut covered = 0usize;
        for _ in 0..n_test {
            let (x, y) = draw(&mut rng);
            if model.split_conformal_set(&x, alpha).unwrap().contains(y) {
                covered += 1;
            }
        }
        coverages.push(covered as f64 / n_test as f64);
    }
    let mean: f64 = coverages.iter().sum::<f64>() / seeds as f64;
    let sd =
        (coverages.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (seeds as f64 - 1.0)).sqrt();
    let se = sd / (seeds as f64).sqrt();
    let lo = 1.0 - alpha - 3.0 * se;
    let hi = 1.0 - alpha + 1.0 / (m as f64 + 1.0) + 3.0 * se;
    assert!(mean >= lo && mean <= hi, "mean coverage {mean} outside [{lo}, {hi}]");
}

#[test]
fn effective_ranks_single_model_is_permutation() {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let cal: Vec<(Vec<f64>, f64)> = (0..50)
        .map(|_| (vec![0.0], rng.random::<f64>()))
        .collect();
    let model =
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 0.0) }, &cal)
            .unwrap();
    let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> = Box::new(|_, _| 0);
    let eff = effective_ranks(&[model], &selector, &cal, &mut rng);
    let mut sorted = eff.ranks.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (1..=50).collect::<Vec<_>>());
}

#[test]
fn effective_ranks_hand_computed() {
    // Two models over four points; deterministic selector alternating 0,1.
    // Model scores are |f(x) - y| with f0 = 0, f1 = 10.
    let cal: Vec<(Vec<f64>, f64)> = vec![
        (vec![0.0], 1.0), // s0 = 1, s1 = 9
        (vec![0.0], 4.0), // s0 = 4, s1 = 6
        (vec![0.0], 2.0), // s0 = 2, s1 = 8
        (vec![0.0], 3.0), // s0 = 3, s1 = 7
    ];
    let m0 =
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 0.0) }, &cal)
            .unwrap();
    let m1 =
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 10.0) }, &cal)
            .unwrap();
    // cal scores m0 sorted: [1,2,3,4]; m1 sorted: [6,7,8,9].
    let counter = std::cell::Cell::new(0usize);
    let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> = Box::new(move |_, _| {
        let i = counter.get();
        counter.set(i + 1);
        i % 2
    });
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let eff = effective_ranks(&[m0, m1], &selector, &cal, &mut rng);
    // Point 0 -> model 0, s=1 -> rank 1. Point 1 -> model 1, s=6 -> rank 1.
    // Point 2 -> model 0, s=2 -> rank 2. Point 3 -> model 1, s=7 -> rank 2.
    assert_eq!(eff.ranks, vec![1, 1, 2, 2]);
}

#[test]
fn all_tied_scores_give_rank_m() {
    let cal: Vec<(Vec<f64>, f64)> = (0..8).map(|_| (vec![0.0], 5.0)).collect();
    let model =
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 0.0) }, &cal)
            .unwrap();
    let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> = Box::new(|_, _| 0);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let eff = effective_ranks(&[model], &selector, &cal, &mut rng);
    assert!(eff.ranks.iter().all(|&r| r == 8));
}

#[test]
fn recalibrated_set_rejects_too_strict_level() {
    let cal: Vec<(Vec<f64>, f64)> = (0..4).map(|i| (vec![0.0], i as f64)).collect();
    let model =
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 0.0) }, &cal)
            .unwrap();
    let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> = Box::new(|_, _| 0);
    let mut rng = ChaCha12Rng::seed_from_u64(6);
    let eff = effective_ranks(&[model], &selector, &cal, &mut rng);
    let models = vec![ConformalModel::calibrate(
        Score::AbsResidual { f: linear_predictor(0.0, 0.0) },
        &cal,
    )
    .unwrap()];
    // m = 4, alpha = 0.1 -> tau_alpha = 5 > m.
    match recalibrated_set(&models, &selector, &eff, &[0.0], &mut rng, 0.1) {
        Err(ConformalError::LevelTooStrict { rank: 5, m: 4 }) => {}
        other => panic!("expected LevelTooStrict, got {other:?}"),
    }
}

#[test]
fn rank_monotonicity_of_sets() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for _ in 0..50 {
        let cal: Vec<(Vec<f64>, f64)> = (0..30)
            .map(|_| (vec![rng.random::<f64>()], normal(&mut rng)))
            .collect();
        let model = ConformalModel::calibrate(
            Score::AbsResidual { f: linear_predictor(0.5, 0.1) },
            &cal,
        )
        .unwrap();
        let x = vec![rng.random::<f64>()];
        let r1 = rng.random_range(1..=30usize);
        let r2 = rng.random_range(r1..=30usize);
        let s1 = model.set_at_rank(&x, RankIndex(r1)).unwrap();
        let s2 = model.set_at_rank(&x, RankIndex(r2)).unwrap();
        assert!(s1.subset_of(&s2), "rank {r1} set not within rank {r2} set");
    }
}

#[test]
fn permuting_calibration_points_leaves_set_unchanged() {
    let mut rng = ChaCha12Rng::seed_from_u64(8);
    let mut cal: Vec<(Vec<f64>, f64)> = (0..40)
        .map(|_| (vec![rng.random::<f64>()], normal(&mut rng)))
        .collect();
    let f = linear_predictor(1.0, 0.0);
    let before = ConformalModel::calibrate(Score::AbsResidual { f: f.clone() }, &cal).unwrap();
    // Deterministic permutation: reverse.
    cal.reverse();
    let after = ConformalModel::calibrate(Score::AbsResidual { f }, &cal).unwrap();
    let x = vec![0.3];
    assert_eq!(
        before.split_conformal_set(&x, 0.1).unwrap(),
        after.split_conformal_set(&x, 0.1).unwrap()
    );
}

/// Builds K models over heterogeneous data and runs the full recalibration
/// pipeline with an aux-based selector, checking the coverage guarantee.
fn recalibration_pipeline_coverage(use_independent_selector: bool) -> f64 {
    let alpha = 0.1;
    let seeds = 40;
    let m_cal = 150;
    let m_aux = 150;
    let n_test = 400;
    let mut coverages = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
        let mut draw = |rng: &mut ChaCha12Rng| {
            let x = rng.random::<f64>() * 2.0 - 1.0;
            let y = x.abs() + 0.25 * normal(rng);
            (vec![x], y)
        };
        let cal: Vec<(Vec<f64>, f64)> = (0..m_cal).map(|_| draw(&mut rng)).collect();
        let aux: Vec<(Vec<f64>, f64)> = (0..m_aux).map(|_| draw(&mut rng)).collect();
        // Two fixed predictors, each good on one half-space; scale model from
        // the known geometry so sets are adaptive.
        let predictors: Vec<Predictor> = vec![linear_predictor(1.0, 0.0), linear_predictor(-1.0, 0.0)];
        let scales: Vec<Predictor> = vec![
            Arc::new(|x: &[f64]| 0.25 + (x[0].min(0.0)).abs()),
            Arc::new(|x: &[f64]| 0.25 + (x[0].max(0.0)).abs()),
        ];
        let make_models = |data: &[(Vec<f64>, f64)]| -> Vec<ConformalModel> {
            predictors
                .iter()
                .zip(&scales)
                .map(|(f, g)| {
                    ConformalModel::calibrate(
                        Score::ScaledResidual { f: f.clone(), g: g.clone() },
                        data,
                    )
                    .unwrap()
                })
                .collect()
        };
        let cal_models = make_models(&cal);
        let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> =
            if use_independent_selector {
                build_aux_selector(
                    make_models(&aux),
                    alpha,
                    SelectorMechanism::MinSe { eta: 1.0, tau: 0.0 },
                )
            } else {
                // Negative control: constant argmin of the *calibration*
                // quantiles, which violates the independence requirement.
                let k_star = {
                    let widths: Vec<f64> = cal_models
                        .iter()
                        .map(|m| m.cal_scores()[ceil_rank(alpha, m.calibration_size()) - 1])
                        .collect();
                    if widths[0] <= widths[1] {
                        0
                    } else {
                        1
                    }
                };
                Box::new(move |_, _| k_star)
            };
        let eff = effective_ranks(&cal_models, &selector, &cal, &mut rng);
        let mut covered = 0usize;
        for _ in 0..n_test {
            let (x, y) = draw(&mut rng);
            let set = recalibrated_set(&cal_models, &selector, &eff, &x, &mut rng, alpha).unwrap();
            if set.contains(y) {
                covered += 1;
            }
        }
        coverages.push(covered as f64 / n_test as f64);
    }
    coverages.iter().sum::<f64>() / seeds as f64
}

#[test]
fn recalibration_pipeline_achieves_coverage() {
    let mean = recalibration_pipeline_coverage(true);
    // 3 s.e. with per-seed binomial noise ~ 0.015/sqrt(40); use a safe margin.
    assert!(mean >= 0.9 - 0.01, "recalibrated coverage {mean}");
}

#[test]
fn aux_selector_mechanisms_agree_on_degenerate_cases() {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let cal: Vec<(Vec<f64>, f64)> = (0..60)
        .map(|_| {
            let x = rng.random::<f64>() * 2.0 - 1.0;
            (vec![x], x + 0.1 * normal(&mut rng))
        })
        .collect();
    // Model 0 is sharp, model 1 is wildly biased: proxy sets differ a lot.
    let models: Vec<ConformalModel> = vec![
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(1.0, 0.0) }, &cal)
            .unwrap(),
        ConformalModel::calibrate(Score::AbsResidual { f: linear_predictor(0.0, 50.0) }, &cal)
            .unwrap(),
    ];
    let rebuild = |mech| {
        let ms: Vec<ConformalModel> = models
            .iter()
            .map(|m| {
                ConformalModel::calibrate(
                    match m.score() {
                        Score::AbsResidual { f } => Score::AbsResidual { f: f.clone() },
                        _ => unreachable!(),
                    },
                    &cal,
                )
                .unwrap()
            })
            .collect();
        build_aux_selector::<ChaCha12Rng>(ms, 0.1, mech)
    };
    // argmin picks the sharp model everywhere.
    let argmin = rebuild(SelectorMechanism::ArgMin);
    // MinSE with e^eta = K and uniform prior reduces to argmin.
    let bonferroni = rebuild(SelectorMechanism::MinSe { eta: (2.0f64).ln(), tau: 0.0 });
    // Exponential with eta = 0 is uniform regardless of x.
    let uniform = rebuild(SelectorMechanism::Exponential { eta: 0.0 });
    let mut uniform_counts = [0usize; 2];
    for i in 0..500 {
        let x = vec![(i as f64 / 250.0) - 1.0];
        assert_eq!(argmin(&x, &mut rng), 0);
        assert_eq!(bonferroni(&x, &mut rng), 0);
        uniform_counts[uniform(&x, &mut rng)] += 1;
    }
    assert!(uniform_counts[0] > 180 && uniform_counts[1] > 180, "{uniform_counts:?}");
}

#[test]
fn calibration_dependent_selector_undercovers() {
    // Documents why the independence precondition matters: a selector that
    // picks the model with the smallest calibration quantile loses coverage.
    let independent = recalibration_pipeline_coverage(true);
    let dependent = recalibration_pipeline_coverage_adversarial();
    assert!(independent >= 0.9 - 0.01, "independent selector coverage {independent}");
    assert!(
        dependent < 0.9 - 0.015,
        "adversarial cal-dependent selector should undercover, got {dependent}"
    );
}

/// Adversarial construction: many interchangeable models whose calibration
/// quantiles differ only by noise; picking the smallest quantile then reusing
/// the same data for recalibration biases coverage downward.
fn recalibration_pipeline_coverage_adversarial() -> f64 {
    let alpha = 0.1;
    let seeds = 60;
    let m_cal = 25;
    let n_test = 300;
    let k = 12;
    let mut coverages = Vec::with_capacity(seeds);
    for seed in 0..seeds as u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(5000 + seed);
        // Every model reads a different independent noise coordinate and the
        // label is constant, so the K residual distributions are equal in law
        // but mutually independent: the smallest calibration quantile is an
        // extreme order statistic, not a genuinely better model.
        let mut draw = |rng: &mut ChaCha12Rng| {
            let x: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
            (x, 0.0)
        };
        let cal: Vec<(Vec<f64>, f64)> = (0..m_cal).map(|_| draw(&mut rng)).collect();
        let models: Vec<ConformalModel> = (0..k)
            .map(|i| {
                let f: Predictor = Arc::new(move |x: &[f64]| x[i]);
                ConformalModel::calibrate(Score::AbsResidual { f }, &cal).unwrap()
            })
            .collect();
        let k_star = (0..k)
            .min_by(|&a, &b| {
                let qa = models[a].cal_scores()[ceil_rank(alpha, m_cal) - 1];
                let qb = models[b].cal_scores()[ceil_rank(alpha, m_cal) - 1];
                qa.partial_cmp(&qb).unwrap()
            })
            .unwrap();
        let selector: conformal_batch::recalibrate::Selector<ChaCha12Rng> =
            Box::new(move |_, _| k_star);
        let eff = effective_ranks(&models, &selector, &cal, &mut rng);
        let mut covered = 0usize;
        for _ in 0..n_test {
            let (x, y) = draw(&mut rng);
            let set = recalibrated_set(&models, &selector, &eff, &x, &mut rng, alpha).unwrap();
            if set.contains(y) {
                covered += 1;
            }
        }
        coverages.push(covered as f64 / n_test as f64);
    }
    coverages.iter().sum::<f64>() / seeds as f64
}
