//! Calibrated conformal models and rank-parameterized prediction sets.

use std::sync::Arc;

use selection_core::{Interval, PredictionSet};
use thiserror::Error;

/// A point predictor over feature vectors.
pub type Predictor = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An arbitrary nonconformity score s(x, y).
pub type ScoreFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("calibration set is empty")]
    EmptyCalibration,
    #[error("rank {rank} outside [1, {m}]")]
    RankOutOfRange { rank: usize, m: usize },
    #[error("rank ceil((1-alpha)(m+1)) = {rank} exceeds m = {m}")]
    LevelTooStrict { rank: usize, m: usize },
    #[error(
        "label grid too coarse near y = {at}: membership flips inside a single cell; \
         refine the grid"
    )]
    GridTooCoarse { at: f64 },
}

/// Uniform search grid over candidate labels, used to bracket sublevel sets
/// of score functions without a closed form.
#[derive(Debug, Clone, Copy)]
pub struct LabelGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl LabelGrid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        assert!(lo < hi && steps >= 2, "degenerate label grid");
        Self { lo, hi, steps }
    }

    fn point(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.steps as f64
    }
}

/// Nonconformity score families. The two residual families admit closed-form
/// sublevel sets (a single interval); anything else is bracketed on a grid.
#[derive(Clone)]
pub enum Score {
    /// s(x, y) = |f(x) - y|
    AbsResidual { f: Predictor },
    /// s(x, y) = |f(x) - y| / g(x), with g > 0 the residual-scale model
    ScaledResidual { f: Predictor, g: Predictor },
    /// Arbitrary score, inverted numerically on the supplied grid.
    Custom { s: ScoreFn, grid: LabelGrid },
}

impl Score {
    pub fn evaluate(&self, x: &[f64], y: f64) -> f64 {
        match self {
            Score::AbsResidual { f } => (f(x) - y).abs(),
            Score::ScaledResidual { f, g } => (f(x) - y).abs() / g(x),
            Score::Custom { s, .. } => s(x, y),
        }
    }
}

/// Rank index into the sorted calibration scores, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankIndex(pub usize);

/// The split-conformal rank ceil((1 - alpha)(m + 1)).
pub fn ceil_rank(alpha: f64, m: usize) -> usize {
    ((1.0 - alpha) * (m as f64 + 1.0)).ceil() as usize
}

/// A score function together with its sorted calibration scores.
pub struct ConformalModel {
    score: Score,
    cal_scores: Vec<f64>,
}

impl ConformalModel {
    /// Computes and sorts the calibration scores.
    pub fn calibrate(score: Score, cal_data: &[(Vec<f64>, f64)]) -> Result<Self, ConformalError> {
        if cal_data.is_empty() {
            return Err(ConformalError::EmptyCalibration);
        }
        let mut cal_scores: Vec<f64> = cal_data
            .iter()
            .map(|(x, y)| score.evaluate(x, *y))
            .collect();
        cal_scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { score, cal_scores })
    }

    pub fn score(&self) -> &Score {
        &self.score
    }

    pub fn cal_scores(&self) -> &[f64] {
        &self.cal_scores
    }

    pub fn calibration_size(&self) -> usize {
        self.cal_scores.len()
    }

    /// Rank of a score within the calibration scores: #{j : s_j <= s}.
    pub fn rank_of(&self, s: f64) -> usize {
        self.cal_scores.partition_point(|&v| v <= s)
    }

    /// The sublevel set { y : s(x, y) <= s_(r) } at the r-th smallest
    /// calibration score.
    pub fn set_at_rank(&self, x: &[f64], r: RankIndex) -> Result<PredictionSet, ConformalError> {
        let m = self.cal_scores.len();
        if r.0 < 1 || r.0 > m {
            return Err(ConformalError::RankOutOfRange { rank: r.0, m });
        }
        let threshold = self.cal_scores[r.0 - 1];
        self.sublevel_set(x, threshold)
    }

    /// The classical split conformal set at miscoverage alpha, i.e. the set
    /// at rank ceil((1-alpha)(m+1)). When that rank exceeds m the full label
    /// space is returned, following the standard convention.
    pub fn split_conformal_set(&self, x: &[f64], alpha: f64) -> Result<PredictionSet, ConformalError> {
        let m = self.cal_scores.len();
        let r = ceil_rank(alpha, m);
        if r > m {
            return Ok(PredictionSet::full());
        }
        self.set_at_rank(x, RankIndex(r))
    }

    fn sublevel_set(&self, x: &[f64], threshold: f64) -> Result<PredictionSet, ConformalError> {
        match &self.score {
            Score::AbsResidual { f } => {
                let center = f(x);
                Ok(PredictionSet::interval(center - threshold, center + threshold))
            }
            Score::ScaledResidual { f, g } => {
                let center = f(x);
                let half = threshold * g(x);
                Ok(PredictionSet::interval(center - half, center + half))
            }
            Score::Custom { s, grid } => bracket_sublevel(&**s, x, threshold, *grid),
        }
    }
}

/// Sublevel-set extraction by grid bracketing plus bisection to 1e-9.
/// Membership is piecewise-monotone between grid points by assumption; a
/// flip inside a single cell (detected at the cell midpoint) means the grid
/// is too coarse and is reported as an error rather than silently missed.
fn bracket_sublevel(
    s: &(dyn Fn(&[f64], f64) -> f64 + Send + Sync),
    x: &[f64],
    threshold: f64,
    grid: LabelGrid,
) -> Result<PredictionSet, ConformalError> {
    let member = |y: f64| s(x, y) <= threshold;
    let n = grid.steps;
    let mut flags = Vec::with_capacity(n + 1);
    for i in 0..=n {
        flags.push(member(grid.point(i)));
    }
    // Refinement check: a cell whose endpoints agree but whose midpoint
    // disagrees hides at least two crossings.
    for i in 0..n {
        if flags[i] == flags[i + 1] {
            let mid = (grid.point(i) + grid.point(i + 1)) / 2.0;
            if member(mid) != flags[i] {
                return Err(ConformalError::GridTooCoarse { at: mid });
            }
        }
    }

    let bisect = |mut inside: f64, mut outside: f64| -> f64 {
        // Invariant: member(inside), !member(outside).
        while (inside - outside).abs() > 1e-9 {
            let mid = 0.5 * (inside + outside);
            if member(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };

    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..=n {
        let y = grid.point(i);
        match (start, flags[i]) {
            (None, true) => {
                let lo = if i == 0 { y } else { bisect(y, grid.point(i - 1)) };
                start = Some(lo);
            }
            (Some(lo), false) => {
                let hi = bisect(grid.point(i - 1), y);
                intervals.push(Interval::new(lo, hi));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = start {
        intervals.push(Interval::new(lo, grid.point(n)));
    }
    Ok(PredictionSet::from_intervals(intervals))
}
