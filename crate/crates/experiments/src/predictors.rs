//! Simple base predictors: ridge regression and k-nearest-neighbor
//! regression, plus k-NN residual-scale models for adaptive scores.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use conformal_batch::Predictor;

use crate::ExperimentError;

/// Fits ridge regression with intercept. On a numerically degenerate design
/// the penalty is grown until the normal equations become solvable.
pub fn fit_ridge(
    data: &[(Vec<f64>, f64)],
    mut lambda: f64,
) -> Result<Predictor, ExperimentError> {
    if data.is_empty() {
        return Err(ExperimentError::EmptyTrainingData);
    }
    let n = data.len();
    let d = data[0].0.len();
    let mut design = DMatrix::zeros(n, d + 1);
    let mut labels = DVector::zeros(n);
    for (row, (x, y)) in data.iter().enumerate() {
        design[(row, 0)] = 1.0;
        for (col, &v) in x.iter().enumerate() {
            design[(row, col + 1)] = v;
        }
        labels[row] = *y;
    }
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * labels;
    lambda = lambda.max(1e-12);
    loop {
        let mut g = gram.clone();
        for i in 0..=d {
            g[(i, i)] += lambda;
        }
        if let Some(ch) = g.cholesky() {
            let coeffs = ch.solve(&rhs);
            let c: Vec<f64> = coeffs.iter().copied().collect();
            return Ok(Arc::new(move |x: &[f64]| {
                c[0] + x.iter().enumerate().map(|(i, &v)| c[i + 1] * v).sum::<f64>()
            }));
        }
        lambda *= 10.0;
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum()
}

/// Indices of the k nearest training points to `x`.
fn nearest_k(data: &[(Vec<f64>, f64)], x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| {
        sq_dist(&data[i].0, x).partial_cmp(&sq_dist(&data[j].0, x)).unwrap()
    });
    order.truncate(k.min(data.len()));
    order
}

/// k-nearest-neighbor mean regressor.
pub fn fit_knn(data: Vec<(Vec<f64>, f64)>, k: usize) -> Result<Predictor, ExperimentError> {
    if data.is_empty() {
        return Err(ExperimentError::EmptyTrainingData);
    }
    assert!(k >= 1);
    Ok(Arc::new(move |x: &[f64]| {
        let idx = nearest_k(&data, x, k);
        idx.iter().map(|&i| data[i].1).sum::<f64>() / idx.len() as f64
    }))
}

/// Residual-scale model g(x): the mean absolute residual of `f` over the k
/// nearest training points, floored at 1e-6 so scaled scores stay finite.
pub fn knn_residual_scale(
    data: Vec<(Vec<f64>, f64)>,
    f: Predictor,
    k: usize,
) -> Result<Predictor, ExperimentError> {
    if data.is_empty() {
        return Err(ExperimentError::EmptyTrainingData);
    }
    assert!(k >= 1);
    let residuals: Vec<f64> = data.iter().map(|(x, y)| (f(x) - y).abs()).collect();
    Ok(Arc::new(move |x: &[f64]| {
        let idx = nearest_k(&data, x, k);
        let mean = idx.iter().map(|&i| residuals[i]).sum::<f64>() / idx.len() as f64;
        mean.max(1e-6)
    }))
}

/// K heterogeneous (predictor, residual-scale) pairs: the training data is
/// partitioned into K blocks by quantiles of the first feature and one ridge
/// regressor plus k-NN scale model is fit per block, so each predictor is
/// accurate on a different region.
pub fn heterogeneous_models(
    train: &[(Vec<f64>, f64)],
    k_models: usize,
) -> Result<Vec<(Predictor, Predictor)>, ExperimentError> {
    if train.is_empty() {
        return Err(ExperimentError::EmptyTrainingData);
    }
    assert!(k_models >= 1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&i, &j| train[i].0[0].partial_cmp(&train[j].0[0]).unwrap());
    let mut models = Vec::with_capacity(k_models);
    for b in 0..k_models {
        let lo = b * train.len() / k_models;
        let hi = ((b + 1) * train.len() / k_models).max(lo + 1).min(train.len());
        let block: Vec<(Vec<f64>, f64)> = order[lo..hi].iter().map(|&i| train[i].clone()).collect();
        let f = fit_ridge(&block, 1e-3)?;
        let knn_k = (block.len() / 10).max(3);
        let g = knn_residual_scale(block, f.clone(), knn_k)?;
        models.push((f, g));
    }
    Ok(models)
}
