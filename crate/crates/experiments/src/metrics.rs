//! Aggregated run metrics.

/// Coverage and mean-length summaries over seeds, with per-seed values kept
/// for downstream reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub coverage_mean: f64,
    pub coverage_se: f64,
    pub length_mean: f64,
    pub length_se: f64,
    pub per_seed_coverage: Vec<f64>,
    pub per_seed_length: Vec<f64>,
    /// Mean interval length of each individual base model, averaged over
    /// seeds (regression scenarios only; empty otherwise).
    pub individual_mean_lengths: Vec<f64>,
    /// Coverage of each individual base model at its base level, averaged
    /// over seeds (regression scenarios only; empty otherwise).
    pub individual_coverages: Vec<f64>,
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl RunMetrics {
    pub fn aggregate(
        per_seed_coverage: Vec<f64>,
        per_seed_length: Vec<f64>,
        individual_mean_lengths: Vec<f64>,
        individual_coverages: Vec<f64>,
    ) -> Self {
        let (coverage_mean, coverage_se) = mean_and_se(&per_seed_coverage);
        let (length_mean, length_se) = mean_and_se(&per_seed_length);
        debug_assert!((0.0..=1.0).contains(&coverage_mean));
        Self {
            coverage_mean,
            coverage_se,
            length_mean,
            length_se,
            per_seed_coverage,
            per_seed_length,
            individual_mean_lengths,
            individual_coverages,
        }
    }
}
