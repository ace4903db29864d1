//! Base online point predictors: incremental-gradient least squares and
//! rolling-window ordinary least squares.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// A point predictor updated one observation at a time.
pub trait OnlineLearner {
    fn predict(&self, x: &[f64]) -> f64;
    fn update(&mut self, x: &[f64], y: f64);
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn predict(&self, x: &[f64]) -> f64 {
        (**self).predict(x)
    }

    fn update(&mut self, x: &[f64], y: f64) {
        (**self).update(x, y)
    }
}

/// Online least squares by a single gradient step per observation on the
/// squared loss, with optional L2 penalty.
#[derive(Debug, Clone)]
pub struct SgdRegressor {
    w: Vec<f64>,
    bias: f64,
    lr: f64,
    l2: f64,
}

impl SgdRegressor {
    pub fn new(dim: usize, lr: f64, l2: f64) -> Self {
        assert!(lr > 0.0 && l2 >= 0.0, "invalid SGD hyperparameters");
        Self { w: vec![0.0; dim], bias: 0.0, lr, l2 }
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.w, self.bias)
    }
}

impl OnlineLearner for SgdRegressor {
    fn predict(&self, x: &[f64]) -> f64 {
        self.bias + self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    fn update(&mut self, x: &[f64], y: f64) {
        let err = self.predict(x) - y;
        for (w, &v) in self.w.iter_mut().zip(x) {
            *w -= self.lr * (err * v + self.l2 * *w);
        }
        self.bias -= self.lr * err;
    }
}

/// Ordinary least squares with intercept, refit over a rolling window of the
/// most recent observations. A small ridge term keeps the normal equations
/// solvable on degenerate windows.
pub struct RollingOls {
    window: usize,
    ridge: f64,
    buf: VecDeque<(Vec<f64>, f64)>,
    coeffs: Option<DVector<f64>>, // [bias, w_1, ..., w_d]
}

impl RollingOls {
    pub fn new(window: usize, ridge: f64) -> Self {
        assert!(window >= 2 && ridge >= 0.0, "invalid rolling OLS parameters");
        Self { window, ridge, buf: VecDeque::with_capacity(window), coeffs: None }
    }

    fn refit(&mut self) {
        let n = self.buf.len();
        let d = self.buf[0].0.len();
        let mut design = DMatrix::zeros(n, d + 1);
        let mut labels = DVector::zeros(n);
        for (row, (x, y)) in self.buf.iter().enumerate() {
            design[(row, 0)] = 1.0;
            for (col, &v) in x.iter().enumerate() {
                design[(row, col + 1)] = v;
            }
            labels[row] = *y;
        }
        let mut gram = design.transpose() * &design;
        let lambda = self.ridge.max(1e-10);
        for i in 0..=d {
            gram[(i, i)] += lambda;
        }
        let rhs = design.transpose() * labels;
        self.coeffs = gram.cholesky().map(|ch| ch.solve(&rhs));
    }
}

impl OnlineLearner for RollingOls {
    fn predict(&self, x: &[f64]) -> f64 {
        match &self.coeffs {
            None => 0.0,
            Some(c) => c[0] + x.iter().enumerate().map(|(i, &v)| c[i + 1] * v).sum::<f64>(),
        }
    }

    fn update(&mut self, x: &[f64], y: f64) {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back((x.to_vec(), y));
        if self.buf.len() >= 2 {
            self.refit();
        }
    }
}
