//! A small dense two-phase simplex solver for the test oracles.
//!
//! Minimizes c^T x subject to A_eq x = b_eq, A_ub x <= b_ub, x >= 0. Uses the
//! full-tableau method with Bland's rule, which cannot cycle. Sized for the
//! tiny programs in this workspace (tens of variables), not for production.

/// Problem statement: minimize `objective . x` subject to the listed equality
/// and upper-bound rows over x >= 0.
pub struct Lp {
    pub objective: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ub: Vec<(Vec<f64>, f64)>,
}

const EPS: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>, // m rows of length n_cols + 1 (last entry is rhs)
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations for the given cost vector, with `allowed`
    /// filtering the columns permitted to enter. Returns false on
    /// unboundedness.
    fn optimize(&mut self, costs: &[f64], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            // Reduced costs r_j = c_j - c_B . column_j.
            let mut entering = None;
            for j in 0..self.n_cols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut r = costs[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    r -= costs[bi] * self.rows[i][j];
                }
                if r < -EPS {
                    entering = Some(j); // Bland: first eligible index
                    break;
                }
            }
            let Some(col) = entering else { return true };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS
                                || (ratio < lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else { return false };
            self.pivot(row, col);
        }
    }
}

/// Solves the program, returning the optimal objective value and x, or None
/// if infeasible or unbounded.
pub fn solve_lp(lp: &Lp) -> Option<(f64, Vec<f64>)> {
    let n = lp.objective.len();
    let m = lp.eq.len() + lp.ub.len();
    let n_slack = lp.ub.len();
    let n_cols = n + n_slack + m; // structural + slacks + one artificial per row

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut row_idx = 0usize;
    let mut push_row = |coeffs: &[f64], slack: Option<usize>, rhs: f64| {
        let mut row = vec![0.0; n_cols + 1];
        row[..n].copy_from_slice(coeffs);
        if let Some(s) = slack {
            row[n + s] = 1.0;
        }
        row[n_cols] = rhs;
        if rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        let art = n + n_slack + row_idx;
        row[art] = 1.0;
        rows.push(row);
        basis.push(art);
        row_idx += 1;
    };
    for (coeffs, rhs) in &lp.eq {
        push_row(coeffs, None, *rhs);
    }
    for (s, (coeffs, rhs)) in lp.ub.iter().enumerate() {
        push_row(coeffs, Some(s), *rhs);
    }

    let mut t = Tableau { rows, basis, n_cols };

    // Phase 1: drive the artificials to zero.
    let mut phase1 = vec![0.0; n_cols];
    for c in phase1.iter_mut().skip(n + n_slack) {
        *c = 1.0;
    }
    if !t.optimize(&phase1, &|_| true) {
        return None;
    }
    let infeasibility: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n + n_slack)
        .map(|(i, _)| t.rhs(i))
        .sum();
    if infeasibility > 1e-7 {
        return None;
    }
    // Pivot remaining (degenerate) artificials out of the basis when a
    // nonzero non-artificial column exists in their row.
    for i in 0..t.rows.len() {
        if t.basis[i] >= n + n_slack {
            if let Some(col) = (0..n + n_slack).find(|&j| t.rows[i][j].abs() > EPS) {
                t.pivot(i, col);
            }
        }
    }

    // Phase 2: real costs; artificials may not re-enter.
    let mut phase2 = vec![0.0; n_cols];
    phase2[..n].copy_from_slice(&lp.objective);
    let limit = n + n_slack;
    if !t.optimize(&phase2, &move |j| j < limit) {
        return None;
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i);
        }
    }
    let obj = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Some((obj, x))
}
