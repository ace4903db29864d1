//! TOML run configurations. Every struct rejects unknown keys so typos fail
//! fast with a named field instead of silently using defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use conformal_online::AdaComaOption;
use experiments::{Method, Scenario};
use selection_core::StabilityBudget;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub eta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
}

impl BudgetConfig {
    pub fn build(&self) -> Result<StabilityBudget, CliError> {
        let b = StabilityBudget::new(self.eta, self.tau, self.alpha)
            .map_err(|e| CliError::Config(format!("budget: {e}")))?;
        match self.alpha_prime {
            Some(ap) => {
                b.with_alpha_prime(ap).map_err(|e| CliError::Config(format!("budget: {e}")))
            }
            None => Ok(b),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    WorstCaseOracle { k: usize, n_trials: usize },
    CoinFlip { k: usize, n_trials: usize },
    ToyRegression { n_train: usize, n_cal: usize, n_test: usize, noise_sd: f64 },
    SinRegression { d: usize, k: usize, n_train: usize, m_cal: usize, m_aux: usize, n_test: usize },
}

impl ScenarioConfig {
    pub fn build(&self) -> Scenario {
        match *self {
            ScenarioConfig::WorstCaseOracle { k, n_trials } => {
                Scenario::WorstCaseOracle { k, n_trials }
            }
            ScenarioConfig::CoinFlip { k, n_trials } => Scenario::CoinFlip { k, n_trials },
            ScenarioConfig::ToyRegression { n_train, n_cal, n_test, noise_sd } => {
                Scenario::ToyRegression { n_train, n_cal, n_test, noise_sd }
            }
            ScenarioConfig::SinRegression { d, k, n_train, m_cal, m_aux, n_test } => {
                Scenario::SinRegression { d, k, n_train, m_cal, m_aux, n_test }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::WorstCaseOracle { .. } => "worst_case_oracle",
            ScenarioConfig::CoinFlip { .. } => "coin_flip",
            ScenarioConfig::ToyRegression { .. } => "toy_regression",
            ScenarioConfig::SinRegression { .. } => "sin_regression",
        }
    }

    pub fn n_test(&self) -> usize {
        match *self {
            ScenarioConfig::WorstCaseOracle { n_trials, .. }
            | ScenarioConfig::CoinFlip { n_trials, .. } => n_trials,
            ScenarioConfig::ToyRegression { n_test, .. }
            | ScenarioConfig::SinRegression { n_test, .. } => n_test,
        }
    }
}

/// Config for `stabsel run`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: String,
    pub budget: BudgetConfig,
    pub scenario: ScenarioConfig,
    /// Explicit seed list; mutually exclusive with `seed_count`.
    pub seeds: Option<Vec<u64>>,
    /// Shorthand for seeds 0..seed_count.
    pub seed_count: Option<u64>,
}

impl RunConfig {
    pub fn method(&self) -> Result<Method, CliError> {
        Method::parse(&self.method)
            .ok_or_else(|| CliError::Config(format!("method: unknown method '{}'", self.method)))
    }

    pub fn seeds(&self, override_seed: Option<u64>) -> Result<Vec<u64>, CliError> {
        if let Some(s) = override_seed {
            return Ok(vec![s]);
        }
        match (&self.seeds, self.seed_count) {
            (Some(_), Some(_)) => {
                Err(CliError::Config("seeds: give either 'seeds' or 'seed_count', not both".into()))
            }
            (Some(s), None) if !s.is_empty() => Ok(s.clone()),
            (None, Some(n)) if n > 0 => Ok((0..n).collect()),
            _ => Err(CliError::Config("seeds: need a nonempty 'seeds' list or 'seed_count'".into())),
        }
    }
}

/// Config for `stabsel online`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineRunConfig {
    pub t_len: usize,
    pub ar: f64,
    pub ma: f64,
    pub noise_sd: f64,
    pub alpha_prime: f64,
    pub gamma: f64,
    pub eta: f64,
    pub tau: f64,
    /// Loss normalization scale L.
    pub scale: f64,
    /// "combined" (Option 1) or "sampled" (Option 2).
    pub option: String,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<u64>,
}

impl OnlineRunConfig {
    pub fn option(&self) -> Result<AdaComaOption, CliError> {
        match self.option.as_str() {
            "combined" => Ok(AdaComaOption::Combined),
            "sampled" => Ok(AdaComaOption::Sampled),
            other => Err(CliError::Config(format!(
                "option: expected 'combined' or 'sampled', got '{other}'"
            ))),
        }
    }

    pub fn seeds(&self, override_seed: Option<u64>) -> Result<Vec<u64>, CliError> {
        if let Some(s) = override_seed {
            return Ok(vec![s]);
        }
        match (&self.seeds, self.seed_count) {
            (Some(_), Some(_)) => {
                Err(CliError::Config("seeds: give either 'seeds' or 'seed_count', not both".into()))
            }
            (Some(s), None) if !s.is_empty() => Ok(s.clone()),
            (None, Some(n)) if n > 0 => Ok((0..n).collect()),
            _ => Err(CliError::Config("seeds: need a nonempty 'seeds' list or 'seed_count'".into())),
        }
    }
}

/// Config for `stabsel recalibrate`: the post-selection recalibration
/// pipeline on a user CSV dataset (header row, feature columns, final label
/// column).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecalibrateConfig {
    pub data: PathBuf,
    /// Number of heterogeneous base models.
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub tau: f64,
    /// Row fractions for the train/cal/aux splits; the remainder is test.
    pub train_frac: f64,
    pub cal_frac: f64,
    pub aux_frac: f64,
}

impl RecalibrateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let total = self.train_frac + self.cal_frac + self.aux_frac;
        if !(self.train_frac > 0.0 && self.cal_frac > 0.0 && self.aux_frac > 0.0 && total < 1.0) {
            return Err(CliError::Config(
                "fractions: train_frac, cal_frac, aux_frac must be positive and sum below 1".into(),
            ));
        }
        if self.k == 0 {
            return Err(CliError::Config("k: need at least one model".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha: {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
    toml::from_str(&raw).map_err(|e| CliError::Config(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_parses() {
        let cfg: RunConfig = toml::from_str(
            r#"
            method = "minse"
            seed_count = 3
            [budget]
            eta = 0.5
            tau = 0.0
            alpha = 0.1
            [scenario]
            kind = "coin_flip"
            k = 10
            n_trials = 1000
            "#,
        )
        .unwrap();
        assert_eq!(cfg.method().unwrap(), Method::MinSe);
        assert_eq!(cfg.seeds(None).unwrap(), vec![0, 1, 2]);
        assert_eq!(cfg.scenario.name(), "coin_flip");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>(
            r#"
            method = "minse"
            bogus = 1
            [budget]
            eta = 0.5
            tau = 0.0
            alpha = 0.1
            [scenario]
            kind = "coin_flip"
            k = 10
            n_trials = 1000
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn seed_override_wins() {
        let cfg: RunConfig = toml::from_str(
            r#"
            method = "minse"
            seeds = [7, 8]
            [budget]
            eta = 0.0
            tau = 0.0
            alpha = 0.1
            [scenario]
            kind = "coin_flip"
            k = 2
            n_trials = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seeds(Some(99)).unwrap(), vec![99]);
    }

    #[test]
    fn online_option_validation() {
        let cfg = OnlineRunConfig {
            t_len: 10,
            ar: 0.5,
            ma: 0.0,
            noise_sd: 1.0,
            alpha_prime: 0.05,
            gamma: 0.01,
            eta: 0.5,
            tau: 0.0,
            scale: 10.0,
            option: "sideways".into(),
            seeds: Some(vec![1]),
            seed_count: None,
        };
        assert!(matches!(cfg.option(), Err(CliError::Config(_))));
    }
}
