//! Domain types shared by the selection mechanisms.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("size profile must contain at least one entry")]
    EmptyProfile,
    #[error("size {value} at index {index} is negative or non-finite")]
    InvalidSize { index: usize, value: f64 },
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("normalized size {value} at index {index} lies outside [0, 1]")]
    SizeOutOfRange { index: usize, value: f64 },
    #[error("eta must be nonnegative and finite, got {0}")]
    InvalidEta(f64),
    #[error("laplace mechanism requires eta > 0")]
    NonPositiveEta,
    #[error("tau must satisfy 0 <= tau < 1, got {0}")]
    InvalidTau(f64),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("alpha_prime {alpha_prime} must satisfy 0 < alpha_prime <= alpha ({alpha})")]
    InfeasibleAlphaPrime { alpha_prime: f64, alpha: f64 },
    #[error("prior entry {value} at index {index} is negative or non-finite")]
    InvalidPriorEntry { index: usize, value: f64 },
    #[error("prior entries sum to {0}, expected 1 within 1e-12")]
    PriorNotSimplex(f64),
    #[error("prior has {prior} entries but the size profile has {profile}")]
    DimensionMismatch { prior: usize, profile: usize },
    #[error("distribution sums to {0}, expected 1 within 1e-10")]
    NotSimplex(f64),
    #[error("distribution entry {value} at index {index} is negative")]
    NegativeMass { index: usize, value: f64 },
    #[error("competitor violates the stability certificate: excess slack {excess} > tau {tau}")]
    CertificateViolated { excess: f64, tau: f64 },
}

/// Stability budget: multiplicative exponent eta, additive slack tau, and the
/// target / base miscoverage levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBudget {
    pub eta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
}

impl StabilityBudget {
    pub fn new(eta: f64, tau: f64, alpha: f64) -> Result<Self, SelectionError> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(SelectionError::InvalidEta(eta));
        }
        if !(0.0..1.0).contains(&tau) {
            return Err(SelectionError::InvalidTau(tau));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SelectionError::InvalidAlpha(alpha));
        }
        Ok(Self { eta, tau, alpha, alpha_prime: None })
    }

    /// Budget carrying a base level alpha' for the adaptive mechanism.
    pub fn with_alpha_prime(mut self, alpha_prime: f64) -> Result<Self, SelectionError> {
        if !(alpha_prime > 0.0) || alpha_prime > self.alpha {
            return Err(SelectionError::InfeasibleAlphaPrime {
                alpha_prime,
                alpha: self.alpha,
            });
        }
        self.alpha_prime = Some(alpha_prime);
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.eta.exp()
    }
}

/// The vector of per-predictor set sizes at a query point, plus the scale L
/// used to normalize them into [0, 1] where a mechanism requires it.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeProfile {
    sizes: Vec<f64>,
    scale: f64,
}

impl SizeProfile {
    /// Profile with unit scale.
    pub fn new(sizes: Vec<f64>) -> Result<Self, SelectionError> {
        Self::with_scale(sizes, 1.0)
    }

    pub fn with_scale(sizes: Vec<f64>, scale: f64) -> Result<Self, SelectionError> {
        if sizes.is_empty() {
            return Err(SelectionError::EmptyProfile);
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(SelectionError::InvalidScale(scale));
        }
        for (index, &value) in sizes.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SelectionError::InvalidSize { index, value });
            }
        }
        Ok(Self { sizes, scale })
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Sizes divided by the scale, checked to lie in [0, 1]. Required by the
    /// Laplace and exponential mechanisms; a violation is a hard error, never
    /// a silent clip.
    pub fn normalized(&self) -> Result<Vec<f64>, SelectionError> {
        let mut out = Vec::with_capacity(self.sizes.len());
        for (index, &s) in self.sizes.iter().enumerate() {
            let value = s / self.scale;
            if !(0.0..=1.0).contains(&value) {
                return Err(SelectionError::SizeOutOfRange { index, value });
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// A prior over the K predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    b: Vec<f64>,
}

impl Prior {
    pub fn new(b: Vec<f64>) -> Result<Self, SelectionError> {
        if b.is_empty() {
            return Err(SelectionError::EmptyProfile);
        }
        for (index, &value) in b.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SelectionError::InvalidPriorEntry { index, value });
            }
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(SelectionError::PriorNotSimplex(sum));
        }
        Ok(Self { b })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "prior needs at least one entry");
        Self { b: vec![1.0 / k as f64; k] }
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.b
    }
}

/// The (gamma = e^eta, tau) budget a distribution was produced under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetUsed {
    pub gamma: f64,
    pub tau: f64,
}

/// A probability vector over the K predictors, together with the budget it
/// consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDistribution {
    p: Vec<f64>,
    budget_used: BudgetUsed,
}

impl SelectionDistribution {
    pub fn new(p: Vec<f64>, budget_used: BudgetUsed) -> Result<Self, SelectionError> {
        if p.is_empty() {
            return Err(SelectionError::EmptyProfile);
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(SelectionError::NegativeMass { index, value });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > crate::SIMPLEX_TOL {
            return Err(SelectionError::NotSimplex(sum));
        }
        Ok(Self { p, budget_used })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn budget_used(&self) -> BudgetUsed {
        self.budget_used
    }

    /// Total mass exceeding the caps `gamma * b_i`. At most tau (up to
    /// tolerance) for any distribution produced under the declared budget.
    pub fn certificate_slack(&self, prior: &Prior, eta: f64) -> f64 {
        let gamma = eta.exp();
        self.p
            .iter()
            .zip(prior.weights())
            .map(|(&p, &b)| (p - gamma * b).max(0.0))
            .sum()
    }
}
