//! Two-sided tests calibrated on the Bernoulli null by simulation.
//!
//! Trial `t` of every routine draws from `rng::stream(seed, &[t])`, so the
//! output is fixed by the seed whatever the size of the thread pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{sample_er, sample_masked_matrix, BitMatrix, ModelParams};
use crate::numerics::{CompensatedSum, RunningMoments};
use crate::rng::stream;

use super::registry::TestStatistic;

/// Whether the test is handed the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Unknown,
    Known,
}

impl MaskMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskMode::Unknown => "unknown",
            MaskMode::Known => "known",
        }
    }
}

impl std::str::FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unknown" => Ok(MaskMode::Unknown),
            "known" => Ok(MaskMode::Known),
            other => Err(Error::invalid(format!("mask mode must be `unknown` or `known`, got `{other}`"))),
        }
    }
}

/// Acceptance region `[lower, upper]` of a two-sided test of size `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
}

impl NullInterval {
    pub fn rejects(&self, value: f64) -> bool {
        value < self.lower || value > self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Smallest null sample size accepted for size `alpha`: `ceil(100 / alpha)`.
pub fn min_null_trials(alpha: f64) -> usize {
    (100.0 / alpha - 1e-9).ceil() as usize
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("size must lie in (0, 1), got {alpha}")))
    }
}

/// Statistic values on `trials` draws from the Bernoulli null. Masked
/// statistics also receive an independent Bern(q) mask.
pub fn null_statistics(
    statistic: &dyn TestStatistic,
    params: &ModelParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[t as u64]);
            let m = sample_er(params.n, params.m, params.p, &mut rng)?;
            if statistic.uses_mask() {
                let mask = sample_er(params.n, params.m, params.q, &mut rng)?;
                statistic.evaluate(&m, Some(&mask), params.p)
            } else {
                statistic.evaluate(&m, None, params.p)
            }
        })
        .collect()
}

/// Empirical `alpha/2` and `1 - alpha/2` null quantiles.
pub fn calibrate_null(
    statistic: &dyn TestStatistic,
    params: &ModelParams,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<NullInterval> {
    check_alpha(alpha)?;
    let need = min_null_trials(alpha);
    if trials < need {
        return Err(Error::InsufficientTrials { need, got: trials });
    }
    let mut values = null_statistics(statistic, params, trials, seed)?;
    values.sort_by(f64::total_cmp);
    Ok(NullInterval {
        lower: empirical_quantile(&values, alpha / 2.0),
        upper: empirical_quantile(&values, 1.0 - alpha / 2.0),
        alpha,
        trials,
        seed,
    })
}

/// Rejection rate under the alternative with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub power_se: f64,
    /// Mean statistic under the alternative.
    pub h1_mean: f64,
    pub h1_se: f64,
    pub trials: usize,
}

/// Power of several tests on shared alternative draws: trial `t` samples
/// one masked-model matrix and every test is evaluated on it.
pub fn estimate_power_many(
    tests: &[(&dyn TestStatistic, &NullInterval)],
    params: &ModelParams,
    mode: MaskMode,
    trials: usize,
    seed: u64,
) -> Result<Vec<PowerEstimate>> {
    if trials == 0 {
        return Err(Error::InsufficientTrials { need: 1, got: 0 });
    }
    if mode == MaskMode::Unknown {
        if let Some((s, _)) = tests.iter().find(|(s, _)| s.uses_mask()) {
            return Err(Error::MaskRequired(s.name().to_string()));
        }
    }
    let cal = params.calibrate()?;
    let rows: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[t as u64]);
            let (m, mask) = sample_masked_matrix(params, &cal, &mut rng)?;
            tests
                .iter()
                .map(|(s, _)| s.evaluate(&m, s.uses_mask().then_some(&mask), params.p))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(tests
        .iter()
        .enumerate()
        .map(|(k, (_, interval))| {
            let mut moments = RunningMoments::new();
            let mut mean = CompensatedSum::new();
            let mut rejections = 0usize;
            for row in &rows {
                moments.push(row[k]);
                mean.add(row[k]);
                rejections += interval.rejects(row[k]) as usize;
            }
            let power = rejections as f64 / trials as f64;
            PowerEstimate {
                power,
                power_se: (power * (1.0 - power) / trials as f64).sqrt(),
                h1_mean: mean.value() / trials as f64,
                h1_se: moments.std_error(),
                trials,
            }
        })
        .collect())
}

pub fn estimate_power(
    statistic: &dyn TestStatistic,
    params: &ModelParams,
    mode: MaskMode,
    interval: &NullInterval,
    trials: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    Ok(estimate_power_many(&[(statistic, interval)], params, mode, trials, seed)?.remove(0))
}

/// Outcome of testing one observed matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Observed statistic value.
    pub statistic: f64,
    pub lower: f64,
    pub upper: f64,
    pub reject: bool,
    pub alpha: f64,
    /// Null sample size.
    pub trials: usize,
    pub seed: u64,
}

impl TestReport {
    pub fn from_interval(value: f64, interval: &NullInterval) -> Self {
        Self {
            statistic: value,
            lower: interval.lower,
            upper: interval.upper,
            reject: interval.rejects(value),
            alpha: interval.alpha,
            trials: interval.trials,
            seed: interval.seed,
        }
    }
}

/// Calibrates `statistic` for the shape of `m` and tests `m`.
#[allow(clippy::too_many_arguments)]
pub fn run_test(
    statistic: &dyn TestStatistic,
    m: &BitMatrix,
    mask: Option<&BitMatrix>,
    p: f64,
    q: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<TestReport> {
    let value = statistic.evaluate(m, mask, p)?;
    let params = ModelParams::new(m.rows(), m.cols(), p, q, 1)?;
    let interval = calibrate_null(statistic, &params, alpha, trials, seed)?;
    Ok(TestReport::from_interval(value, &interval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signedstats::registry::{SignedFourCycles, SignedWedges};

    #[test]
    fn quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(empirical_quantile(&x, 0.0), 1.0);
        assert_eq!(empirical_quantile(&x, 1.0), 5.0);
        assert_eq!(empirical_quantile(&x, 0.5), 3.0);
        assert!((empirical_quantile(&x, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(min_null_trials(0.05), 2000);
        assert_eq!(min_null_trials(0.01), 10_000);
    }

    #[test]
    fn trials_floor_enforced() {
        let params = ModelParams::new(3, 3, 0.5, 1.0, 2).unwrap();
        let err = calibrate_null(&SignedWedges, &params, 0.05, 1999, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientTrials { need: 2000, got: 1999 }));
    }

    #[test]
    fn degenerate_statistic_gives_point_interval() {
        let params = ModelParams::new(1, 1, 0.3, 1.0, 2).unwrap();
        let iv = calibrate_null(&SignedWedges, &params, 0.05, 2000, 3).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
        assert!(!iv.rejects(0.0));
    }

    #[test]
    fn symmetric_null_interval() {
        let params = ModelParams::new(6, 6, 0.5, 1.0, 2).unwrap();
        let iv = calibrate_null(&SignedFourCycles, &params, 0.05, 4000, 11).unwrap();
        assert!((iv.lower + iv.upper).abs() <= iv.width());
        let again = calibrate_null(&SignedFourCycles, &params, 0.05, 4000, 11).unwrap();
        assert_eq!(iv, again);
    }

    #[test]
    fn report_serializes_expected_fields() {
        let iv = NullInterval {
            lower: -1.0,
            upper: 2.0,
            alpha: 0.05,
            trials: 2000,
            seed: 9,
        };
        let r = TestReport::from_interval(3.0, &iv);
        assert!(r.reject);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["alpha", "lower", "reject", "seed", "statistic", "trials", "upper"]);
    }

    #[test]
    fn wedge_mean_vanishes_at_half_density() {
        use crate::gaussmodel::sample_masked_matrix;
        use crate::signedstats::signed_wedges;
        let params = ModelParams::new(30, 30, 0.5, 0.7, 8).unwrap();
        let cal = params.calibrate().unwrap();
        let mut moments = RunningMoments::new();
        for t in 0..2000u64 {
            let mut rng = stream(61, &[t]);
            let (m, _) = sample_masked_matrix(&params, &cal, &mut rng).unwrap();
            moments.push(signed_wedges(&m, 0.5));
        }
        assert!(moments.mean().abs() <= 4.0 * moments.std_error(), "{} {}", moments.mean(), moments.std_error());
    }
}
