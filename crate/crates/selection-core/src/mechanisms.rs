//! Stable selection mechanisms over a size profile.

use rand::Rng;

use crate::set::{weighted_majority, PredictionSet};
use crate::types::{BudgetUsed, Prior, SelectionDistribution, SelectionError, SizeProfile};
use crate::{CERTIFICATE_TOL, OBJECTIVE_TOL};

/// One Laplace(1/eta) draw via the inverse CDF:
/// eps = -(1/eta) * sign(u) * ln(1 - 2|u|) with u uniform on (-1/2, 1/2).
/// Cross-language reimplementations match given the same uniform stream.
fn laplace_draw<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let t = 1.0 - 2.0 * u.abs();
        if t > 0.0 {
            return -(1.0 / eta) * u.signum() * t.ln();
        }
        // u landed exactly on the boundary; redraw.
    }
}

/// Argmin of normalized size plus i.i.d. Laplace(1/eta) noise. Ties broken by
/// lowest index (probability zero under fresh noise; the rule makes the
/// outcome deterministic under duplicated draws).
pub fn laplace_select<R: Rng + ?Sized>(
    xi: &SizeProfile,
    eta: f64,
    rng: &mut R,
) -> Result<usize, SelectionError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SelectionError::NonPositiveEta);
    }
    let sizes = xi.normalized()?;
    if sizes.len() == 1 {
        return Ok(0);
    }
    let mut best = 0usize;
    let mut best_score = f64::INFINITY;
    for (i, &s) in sizes.iter().enumerate() {
        let score = s + laplace_draw(eta, rng);
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

/// Exponential-mechanism distribution p_i proportional to exp(-eta * size_i),
/// computed with a max-shifted softmax. 2*eta-stable against the uniform
/// prior.
pub fn exponential_select(
    xi: &SizeProfile,
    eta: f64,
) -> Result<SelectionDistribution, SelectionError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(SelectionError::InvalidEta(eta));
    }
    let sizes = xi.normalized()?;
    if sizes.len() == 1 {
        return SelectionDistribution::new(vec![1.0], BudgetUsed { gamma: (2.0 * eta).exp(), tau: 0.0 });
    }
    let scores: Vec<f64> = sizes.iter().map(|&s| -eta * s).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let p: Vec<f64> = exps.iter().map(|&e| e / total).collect();
    SelectionDistribution::new(p, BudgetUsed { gamma: (2.0 * eta).exp(), tau: 0.0 })
}

fn check_prior(xi: &SizeProfile, b: &Prior) -> Result<(), SelectionError> {
    if b.len() != xi.len() {
        return Err(SelectionError::DimensionMismatch { prior: b.len(), profile: xi.len() });
    }
    Ok(())
}

/// Fill order for the greedy MinSE solve: size ascending, ties broken by
/// larger prior first, then by lower index. Any tie order yields the same
/// objective value since tied indices share a size.
fn fill_order(sizes: &[f64], b: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&i, &j| {
        sizes[i]
            .partial_cmp(&sizes[j])
            .unwrap()
            .then(b[j].partial_cmp(&b[i]).unwrap())
            .then(i.cmp(&j))
    });
    order
}

/// Greedy exact solve of the MinSE linear program with caps `gamma * b_i` and
/// total extra slack `tau`: walk indices in fill order, give each as much mass
/// as its cap plus the remaining slack allows.
fn greedy_fill(sizes: &[f64], b: &[f64], gamma: f64, tau: f64) -> Vec<f64> {
    let order = fill_order(sizes, b);
    let mut p = vec![0.0; sizes.len()];
    let mut remaining = 1.0_f64;
    let mut slack = tau;
    let mut last = order[0];
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let cap = gamma * b[i];
        let give = remaining.min(cap + slack).max(0.0);
        slack = (slack - (give - cap).max(0.0)).max(0.0);
        p[i] = give;
        remaining -= give;
        last = i;
    }
    // Total capacity gamma + tau >= 1, so any leftover is floating-point
    // residue; park it on the last filled index.
    if remaining > 0.0 {
        p[last] += remaining;
    }
    p
}

/// Exact optimum of the MinSE linear program:
/// minimize sum_i p_i size_i subject to p on the simplex and
/// p_i <= e^eta b_i + s_i with s >= 0, sum_i s_i <= tau.
///
/// Sizes may be arbitrary nonnegative reals; the LP needs no [0, 1] bound.
pub fn minse(
    xi: &SizeProfile,
    b: &Prior,
    eta: f64,
    tau: f64,
) -> Result<SelectionDistribution, SelectionError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(SelectionError::InvalidEta(eta));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(SelectionError::InvalidTau(tau));
    }
    check_prior(xi, b)?;
    let gamma = eta.exp();
    if xi.len() == 1 {
        return SelectionDistribution::new(vec![1.0], BudgetUsed { gamma, tau });
    }
    let p = greedy_fill(xi.sizes(), b.weights(), gamma, tau);
    SelectionDistribution::new(p, BudgetUsed { gamma, tau })
}

/// Adaptive MinSE: also optimizes the split of the miscoverage budget between
/// the multiplicative part gamma = e^eta and the additive slack tau, subject
/// to gamma * alpha' + tau <= alpha.
///
/// After substituting gamma, the optimal slack at any fixed gamma is
/// tau(gamma) = alpha - gamma * alpha', and the inner problem is MinSE with
/// caps gamma * b_i. The objective is piecewise linear in gamma on
/// [1, alpha/alpha']; its breakpoints are the gammas where a prefix of the
/// fill order exactly absorbs all mass, so evaluating breakpoints plus
/// endpoints finds the optimum.
pub fn ada_minse(
    xi: &SizeProfile,
    b: &Prior,
    alpha: f64,
    alpha_prime: f64,
) -> Result<SelectionDistribution, SelectionError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SelectionError::InvalidAlpha(alpha));
    }
    if !(alpha_prime > 0.0) || alpha_prime > alpha {
        return Err(SelectionError::InfeasibleAlphaPrime { alpha_prime, alpha });
    }
    check_prior(xi, b)?;
    let gamma_max = alpha / alpha_prime;
    if xi.len() == 1 {
        return SelectionDistribution::new(vec![1.0], BudgetUsed { gamma: 1.0, tau: alpha - alpha_prime });
    }

    let sizes = xi.sizes();
    let weights = b.weights();
    let order = fill_order(sizes, weights);

    let mut candidates = vec![1.0, gamma_max];
    let mut prefix = 0.0;
    for &i in &order {
        prefix += weights[i];
        // gamma at which the prefix caps plus tau(gamma) sum to exactly 1.
        if prefix > alpha_prime {
            let g = (1.0 - alpha) / (prefix - alpha_prime);
            if g > 1.0 && g < gamma_max {
                candidates.push(g);
            }
        }
    }
    candidates.sort_by(|a, c| a.partial_cmp(c).unwrap());

    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for &gamma in &candidates {
        let tau = (alpha - gamma * alpha_prime).max(0.0);
        let p = greedy_fill(sizes, weights, gamma, tau);
        let obj = expected_size_raw(&p, sizes);
        let better = match &best {
            None => true,
            Some((best_obj, _, _)) => obj < best_obj - 1e-12,
        };
        if better {
            best = Some((obj, gamma, p));
        }
    }
    let (_, gamma, p) = best.expect("candidate list is never empty");
    let tau = (alpha - gamma * alpha_prime).max(0.0);
    SelectionDistribution::new(p, BudgetUsed { gamma, tau })
}

fn expected_size_raw(p: &[f64], sizes: &[f64]) -> f64 {
    p.iter().zip(sizes).map(|(&pi, &s)| pi * s).sum()
}

/// Expected selected-set size under a distribution.
pub fn expected_size(dist: &SelectionDistribution, xi: &SizeProfile) -> f64 {
    expected_size_raw(dist.probabilities(), xi.sizes())
}

/// Inverse-CDF sample from a selection distribution.
pub fn sample_selection<R: Rng + ?Sized>(dist: &SelectionDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in dist.probabilities().iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    dist.len() - 1
}

/// The derandomized set { y : sum_i p_i 1{y in sets_i} >= 1/2 }.
pub fn derandomize(dist: &SelectionDistribution, sets: &[PredictionSet]) -> PredictionSet {
    assert_eq!(dist.len(), sets.len(), "distribution/set count mismatch");
    let weighted: Vec<(f64, &PredictionSet)> = dist
        .probabilities()
        .iter()
        .copied()
        .zip(sets.iter())
        .collect();
    weighted_majority(&weighted, 0.0)
}

/// True iff MinSE at (b, eta, tau) achieves expected size no larger than the
/// competitor's, up to tolerance. The competitor must itself satisfy the
/// stability certificate for (b, eta, tau); otherwise the comparison is
/// meaningless and an error is returned.
pub fn dominance_check(
    xi: &SizeProfile,
    competitor: &SelectionDistribution,
    b: &Prior,
    eta: f64,
    tau: f64,
) -> Result<bool, SelectionError> {
    check_prior(xi, b)?;
    let excess = competitor.certificate_slack(b, eta);
    if excess > tau + CERTIFICATE_TOL {
        return Err(SelectionError::CertificateViolated { excess, tau });
    }
    let optimal = minse(xi, b, eta, tau)?;
    Ok(expected_size(&optimal, xi) <= expected_size(competitor, xi) + OBJECTIVE_TOL)
}
