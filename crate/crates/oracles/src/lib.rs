//! Independent brute-force oracles for the test suites.
//!
//! Everything here is deliberately implemented by a different route than the
//! production code it checks: a dense two-phase simplex solver for the
//! selection linear programs, 1-D quadrature for Laplace selection
//! probabilities, and direct pointwise evaluation for weighted-majority sets.
//! Production crates must never depend on this crate outside dev-dependencies.

pub mod lp;

pub use lp::{solve_lp, Lp};

/// Laplace(1/eta) density.
fn laplace_pdf(x: f64, eta: f64) -> f64 {
    0.5 * eta * (-eta * x.abs()).exp()
}

/// Laplace(1/eta) CDF.
fn laplace_cdf(x: f64, eta: f64) -> f64 {
    if x < 0.0 {
        0.5 * (eta * x).exp()
    } else {
        1.0 - 0.5 * (-eta * x).exp()
    }
}

/// Selection probabilities of the noisy-argmin rule by composite-Simpson
/// quadrature over the event that candidate i attains the minimum:
/// P(i) = int f(e) prod_{j != i} P(eps_j > sizes_i - sizes_j + e) de.
pub fn laplace_selection_probs(sizes: &[f64], eta: f64) -> Vec<f64> {
    let k = sizes.len();
    let half_width = 45.0 / eta + 2.0;
    let n = 40_000usize; // even
    let h = 2.0 * half_width / n as f64;
    let mut probs = vec![0.0; k];
    for (i, &si) in sizes.iter().enumerate() {
        let integrand = |e: f64| -> f64 {
            let mut v = laplace_pdf(e, eta);
            for (j, &sj) in sizes.iter().enumerate() {
                if j != i {
                    v *= 1.0 - laplace_cdf(si - sj + e, eta);
                }
            }
            v
        };
        let mut acc = integrand(-half_width) + integrand(half_width);
        for step in 1..n {
            let e = -half_width + step as f64 * h;
            acc += integrand(e) * if step % 2 == 1 { 4.0 } else { 2.0 };
        }
        probs[i] = acc * h / 3.0;
    }
    // Ties in the continuous model have probability zero, so the masses sum
    // to one up to quadrature error; renormalize to make comparisons clean.
    let total: f64 = probs.iter().sum();
    probs.iter().map(|&p| p / total).collect()
}

/// Objective of the MinSE linear program solved by the generic simplex:
/// minimize sum p_i sizes_i over the simplex with p_i <= gamma*b_i + s_i and
/// sum s_i <= tau. Returns (objective, p).
pub fn minse_lp(sizes: &[f64], prior: &[f64], gamma: f64, tau: f64) -> (f64, Vec<f64>) {
    let k = sizes.len();
    // Variables: p_0..p_{k-1}, s_0..s_{k-1}.
    let n = 2 * k;
    let mut objective = vec![0.0; n];
    objective[..k].copy_from_slice(sizes);

    let mut eq_row = vec![0.0; n];
    eq_row[..k].fill(1.0);

    let mut ub: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..k {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row[k + i] = -1.0;
        ub.push((row, gamma * prior[i]));
    }
    let mut slack_row = vec![0.0; n];
    slack_row[k..].fill(1.0);
    ub.push((slack_row, tau));

    let lp = Lp {
        objective,
        eq: vec![(eq_row, 1.0)],
        ub,
    };
    let (obj, x) = solve_lp(&lp).expect("MinSE LP is always feasible");
    (obj, x[..k].to_vec())
}

/// Objective of the AdaMinSE program as a single linear program in
/// (d, s, gamma - 1, tau). Returns (objective, d, gamma, tau).
pub fn ada_minse_lp(
    sizes: &[f64],
    prior: &[f64],
    alpha: f64,
    alpha_prime: f64,
) -> (f64, Vec<f64>, f64, f64) {
    let k = sizes.len();
    // Variables: d_0..d_{k-1}, s_0..s_{k-1}, g (= gamma - 1 >= 0), t (= tau).
    let n = 2 * k + 2;
    let g_idx = 2 * k;
    let t_idx = 2 * k + 1;
    let mut objective = vec![0.0; n];
    objective[..k].copy_from_slice(sizes);

    let mut eq_row = vec![0.0; n];
    eq_row[..k].fill(1.0);

    let mut ub: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..k {
        // d_i - s_i - b_i * g <= b_i  (i.e. d_i <= (1 + g) b_i + s_i)
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row[k + i] = -1.0;
        row[g_idx] = -prior[i];
        ub.push((row, prior[i]));
    }
    // sum s_i - t <= 0
    let mut slack_row = vec![0.0; n];
    slack_row[k..2 * k].fill(1.0);
    slack_row[t_idx] = -1.0;
    ub.push((slack_row, 0.0));
    // alpha' * (1 + g) + t <= alpha
    let mut budget_row = vec![0.0; n];
    budget_row[g_idx] = alpha_prime;
    budget_row[t_idx] = 1.0;
    ub.push((budget_row, alpha - alpha_prime));

    let lp = Lp {
        objective,
        eq: vec![(eq_row, 1.0)],
        ub,
    };
    let (obj, x) = solve_lp(&lp).expect("AdaMinSE LP is feasible when alpha' <= alpha");
    (obj, x[..k].to_vec(), 1.0 + x[g_idx], x[t_idx])
}

/// Direct evaluation of the weighted-majority membership rule at a point.
pub fn majority_member(weights: &[f64], sets: &[Vec<(f64, f64)>], y: f64) -> bool {
    let total: f64 = weights
        .iter()
        .zip(sets)
        .map(|(&w, ivs)| {
            if ivs.iter().any(|&(lo, hi)| lo <= y && y <= hi) {
                w
            } else {
                0.0
            }
        })
        .sum();
    total >= 0.5 - 1e-12
}
