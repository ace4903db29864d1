//! Synthetic scenario generators.

use rand::Rng;
use selection_core::PredictionSet;
use std::sync::Arc;

use conformal_batch::Predictor;

use crate::ExperimentError;

/// Standard normal draw via Box-Muller.
pub(crate) fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Worst-case oracle profile: one uniformly chosen oracle abstains (empty
/// set) while the others return the whole label space [0, 1]. Returns the
/// sets and the abstaining index.
pub fn gen_worst_case_oracles(k: usize, rng: &mut impl Rng) -> (Vec<PredictionSet>, usize) {
    assert!(k >= 2, "need at least two oracles");
    let j = rng.random_range(0..k);
    let sets = (0..k)
        .map(|i| if i == j { PredictionSet::empty() } else { PredictionSet::interval(0.0, 1.0) })
        .collect();
    (sets, j)
}

/// Coin-flip profile: each of the K sets is independently the whole label
/// space [0, 1] with probability 1 - alpha_base and empty otherwise.
pub fn gen_coin_flips(k: usize, alpha_base: f64, rng: &mut impl Rng) -> Vec<PredictionSet> {
    assert!((0.0..=1.0).contains(&alpha_base), "alpha_base outside [0, 1]");
    (0..k)
        .map(|_| {
            if rng.random::<f64>() < alpha_base {
                PredictionSet::empty()
            } else {
                PredictionSet::interval(0.0, 1.0)
            }
        })
        .collect()
}

/// Toy regression: X ~ Uniform([-1, 1]), Y = |X| + noise with the default
/// noise variance 0.25 (standard deviation 0.5).
pub fn gen_toy_regression(n: usize, rng: &mut impl Rng) -> Vec<(Vec<f64>, f64)> {
    gen_toy_regression_with_noise(n, 0.5, rng)
}

/// Toy regression with explicit noise standard deviation, for the variant
/// reading of the noise parameter.
pub fn gen_toy_regression_with_noise(
    n: usize,
    noise_sd: f64,
    rng: &mut impl Rng,
) -> Vec<(Vec<f64>, f64)> {
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * 2.0 - 1.0;
            let y = x.abs() + noise_sd * normal(rng);
            (vec![x], y)
        })
        .collect()
}

/// The two fixed toy-regression predictors f1(x) = x and f2(x) = -x.
pub fn toy_predictors() -> Vec<Predictor> {
    vec![Arc::new(|x: &[f64]| x[0]), Arc::new(|x: &[f64]| -x[0])]
}

/// Sin regression: X ~ N(0, I_d), Y = sin(<beta, X>) + 0.1 N(0,1) with
/// beta = (1/d, ..., 1/d).
pub fn gen_sin_regression(n: usize, d: usize, rng: &mut impl Rng) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 1 && d >= 1);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
            let mean = x.iter().sum::<f64>() / d as f64;
            let y = mean.sin() + 0.1 * normal(rng);
            (x, y)
        })
        .collect()
}

/// ARMA(1,1) stream y_t = ar y_{t-1} + e_t + ma e_{t-1}; the features are the
/// `lags` most recent values (zero-padded at the start).
pub fn gen_arma_stream(
    t_len: usize,
    ar: f64,
    ma: f64,
    noise_sd: f64,
    lags: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(Vec<f64>, f64)>, ExperimentError> {
    if !(ar.abs() < 1.0) {
        return Err(ExperimentError::NonStationary(ar));
    }
    assert!(lags >= 1 && noise_sd > 0.0);
    let mut out = Vec::with_capacity(t_len);
    let mut hist = vec![0.0f64; lags];
    let (mut y_prev, mut e_prev) = (0.0, 0.0);
    for _ in 0..t_len {
        let e = noise_sd * normal(rng);
        let y = ar * y_prev + e + ma * e_prev;
        out.push((hist.clone(), y));
        hist.rotate_right(1);
        hist[0] = y;
        y_prev = y;
        e_prev = e;
    }
    Ok(out)
}
