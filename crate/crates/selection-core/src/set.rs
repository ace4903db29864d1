//! Prediction sets as finite unions of closed real intervals, and the
//! endpoint-sweep weighted majority vote used for derandomization and online
//! aggregation.

/// A closed interval [lo, hi]. Infinite endpoints are permitted so that a
/// "full label space" set can be represented; its measure is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }
}

/// A finite union of disjoint closed intervals, sorted by lower endpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    intervals: Vec<Interval>,
}

impl PredictionSet {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// The whole real line.
    pub fn full() -> Self {
        Self::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { intervals: vec![Interval::new(lo, hi)] }
    }

    /// Builds a set from arbitrary intervals, sorting and merging overlapping
    /// or touching ones.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|iv| !iv.lo.is_nan() && !iv.hi.is_nan());
        intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1
            && self.intervals[0].lo == f64::NEG_INFINITY
            && self.intervals[0].hi == f64::INFINITY
    }

    /// Sum of interval lengths (the Lebesgue measure of the union).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(y))
    }

    /// True when `other` contains every interval of `self`.
    pub fn subset_of(&self, other: &PredictionSet) -> bool {
        self.intervals.iter().all(|iv| {
            other
                .intervals
                .iter()
                .any(|o| o.lo <= iv.lo && iv.hi <= o.hi)
        })
    }
}

/// The set { y : offset + sum_i w_i 1{y in sets_i} >= 1/2 }, computed exactly
/// by a sweep over the sorted interval endpoints. The membership weight is
/// piecewise constant between endpoints, so it suffices to probe every
/// endpoint and one interior point per gap; boundary points are kept per the
/// closed-interval convention, which can yield isolated points.
///
/// `offset` is a constant weight attached to the whole line; it lets callers
/// fold "full label space" members into the vote without infinite endpoints.
pub fn weighted_majority(weighted: &[(f64, &PredictionSet)], offset: f64) -> PredictionSet {
    const HALF: f64 = 0.5 - 1e-12;

    let weight_at = |y: f64| -> f64 {
        offset
            + weighted
                .iter()
                .map(|(w, s)| if s.contains(y) { *w } else { 0.0 })
                .sum::<f64>()
    };

    if offset >= HALF {
        // The whole line is in regardless of the sets.
        return PredictionSet::full();
    }

    let mut endpoints: Vec<f64> = weighted
        .iter()
        .flat_map(|(_, s)| s.intervals().iter().flat_map(|iv| [iv.lo, iv.hi]))
        .filter(|e| e.is_finite())
        .collect();
    // A set may still reach infinity through infinite endpoints; account for
    // the two tails explicitly below.
    endpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    endpoints.dedup();

    if endpoints.is_empty() {
        // Only empty or full-line members.
        return if weight_at(0.0) >= HALF {
            PredictionSet::full()
        } else {
            PredictionSet::empty()
        };
    }

    // Probe points in left-to-right order: left tail, then alternating
    // endpoint / gap-midpoint, then right tail. Each probe has a definite
    // extent: a tail, a point, or an open gap.
    #[derive(Clone, Copy)]
    enum Piece {
        LeftTail(f64),
        Point(f64),
        Gap(f64, f64),
        RightTail(f64),
    }

    let mut pieces: Vec<(Piece, bool)> = Vec::with_capacity(2 * endpoints.len() + 1);
    let first = endpoints[0];
    let last = *endpoints.last().unwrap();
    pieces.push((Piece::LeftTail(first), weight_at(first - 1.0) >= HALF));
    for (i, &e) in endpoints.iter().enumerate() {
        pieces.push((Piece::Point(e), weight_at(e) >= HALF));
        if let Some(&next) = endpoints.get(i + 1) {
            let mid = e + (next - e) / 2.0;
            pieces.push((Piece::Gap(e, next), weight_at(mid) >= HALF));
        }
    }
    pieces.push((Piece::RightTail(last), weight_at(last + 1.0) >= HALF));

    // Assemble maximal runs of included pieces into closed intervals.
    let mut intervals: Vec<Interval> = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    for (piece, included) in pieces {
        if !included {
            if let Some((lo, hi)) = current.take() {
                intervals.push(Interval::new(lo, hi));
            }
            continue;
        }
        let (lo, hi) = match piece {
            Piece::LeftTail(e) => (f64::NEG_INFINITY, e),
            Piece::Point(e) => (e, e),
            Piece::Gap(a, b) => (a, b),
            Piece::RightTail(e) => (e, f64::INFINITY),
        };
        current = match current {
            Some((start, _)) => Some((start, hi)),
            None => Some((lo, hi)),
        };
    }
    if let Some((lo, hi)) = current {
        intervals.push(Interval::new(lo, hi));
    }
    PredictionSet { intervals }
}
