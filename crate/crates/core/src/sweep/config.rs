use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signedstats::{min_null_trials, MaskMode, StatisticRegistry};

/// A `(d, q)` grid sweep. Each axis is given either explicitly or as
/// exponents of `n`: `d = round(n^a)` and `q = n^{-b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_exponents: Option<Vec<f64>>,
    pub statistics: Vec<String>,
    #[serde(default = "default_mask_mode")]
    pub mask_mode: MaskMode,
    /// Alternative draws per cell.
    pub trials: usize,
    /// Null draws per calibration; defaults to `max(trials, ceil(100 / alpha))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_trials: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_mask_mode() -> MaskMode {
    MaskMode::Unknown
}

fn default_alpha() -> f64 {
    0.05
}

fn axis<T: Clone>(name: &str, explicit: &Option<Vec<T>>, exponents: &Option<Vec<f64>>) -> Result<()> {
    match (explicit, exponents) {
        (Some(v), None) if !v.is_empty() => Ok(()),
        (None, Some(v)) if !v.is_empty() => Ok(()),
        (Some(_), Some(_)) => Err(Error::invalid(format!(
            "give either `{name}` or `{name}_exponents`, not both"
        ))),
        _ => Err(Error::invalid(format!("the `{name}` grid is empty"))),
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn d_grid(&self) -> Vec<usize> {
        match (&self.d, &self.d_exponents) {
            (Some(d), _) => d.clone(),
            (None, Some(a)) => a
                .iter()
                .map(|&a| ((self.n as f64).powf(a).round() as usize).max(1))
                .collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn q_grid(&self) -> Vec<f64> {
        match (&self.q, &self.q_exponents) {
            (Some(q), _) => q.clone(),
            (None, Some(b)) => b.iter().map(|&b| (self.n as f64).powf(-b)).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn effective_null_trials(&self) -> usize {
        self.null_trials.unwrap_or_else(|| self.trials.max(min_null_trials(self.alpha)))
    }

    pub fn validate(&self, registry: &StatisticRegistry) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n and m must be at least 1"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        axis("d", &self.d, &self.d_exponents)?;
        axis("q", &self.q, &self.q_exponents)?;
        if self.d_grid().contains(&0) {
            return Err(Error::invalid("every d must be at least 1"));
        }
        if let Some(q) = self.q_grid().iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::invalid(format!("every q must lie in [0, 1], got {q}")));
        }
        if self.statistics.is_empty() {
            return Err(Error::invalid("no statistics selected"));
        }
        for name in &self.statistics {
            let s = registry.get(name)?;
            if s.uses_mask() && self.mask_mode == MaskMode::Unknown {
                return Err(Error::MaskRequired(name.clone()));
            }
        }
        if self.trials == 0 {
            return Err(Error::InsufficientTrials { need: 1, got: 0 });
        }
        let need = min_null_trials(self.alpha);
        let got = self.effective_null_trials();
        if got < need {
            return Err(Error::InsufficientTrials { need, got });
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        Ok(())
    }
}
