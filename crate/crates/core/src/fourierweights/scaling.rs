//! Empirical decay of `|E[SW | X] - Lambda|` in the latent dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{sample_latents_in_s_rho, Calibration, LatentMatrix, DEFAULT_S_RHO_ATTEMPTS};
use crate::numerics::RunningMoments;
use crate::rng::{derive_seed, stream, tags};

use super::lambda::{leading_term_lambda, DensityVariant};
use super::stars::conditional_star_sw_mc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub alpha_size: usize,
    pub d_grid: Vec<usize>,
    pub rho: f64,
    pub p: f64,
    /// Latent draws per dimension.
    pub draws: usize,
    /// Monte Carlo samples per draw.
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub variant: DensityVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub d: usize,
    pub mean_residual: f64,
    /// Standard error of `mean_residual` over the latent draws.
    pub residual_se: f64,
    /// Root mean square of the per-draw Monte Carlo standard errors.
    pub mc_error: f64,
    pub mean_abs_lambda: f64,
    pub mean_abs_estimate: f64,
    /// Smallest `C` with `mean_residual <= (C rho |alpha| / sqrt(d))^(l + 1)`.
    pub fitted_constant: f64,
    /// Smallest `C` with `|Lambda| <= (C rho |alpha| / sqrt(d))^l` on every draw.
    pub lambda_constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub ell: usize,
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln mean_residual` against `ln d`.
    pub slope: f64,
    pub slope_limit: f64,
    /// `mean_residual[i] / mean_residual[i + 1]`.
    pub ratios: Vec<f64>,
    pub fitted_constant: f64,
    pub status: VerificationStatus,
    pub notes: Vec<String>,
}

/// One latent draw: `(Lambda, Monte Carlo estimate, its standard error)`.
pub fn residual_for_latents(
    x: &LatentMatrix,
    cal: &Calibration,
    variant: DensityVariant,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let lambda = leading_term_lambda(x, cal, variant)?;
    let est = conditional_star_sw_mc(x, cal, samples, seed)?;
    Ok((lambda, est.value, est.se))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn verify_remainder_scaling(config: &ScalingConfig) -> Result<ScalingReport> {
    if !(2..=4).contains(&config.alpha_size) {
        return Err(Error::invalid(format!(
            "pattern size must be 2, 3 or 4, got {}",
            config.alpha_size
        )));
    }
    if config.d_grid.len() < 2 {
        return Err(Error::invalid("the dimension grid needs at least two points"));
    }
    if config.draws < 2 {
        return Err(Error::InsufficientTrials {
            need: 2,
            got: config.draws,
        });
    }
    let k = config.alpha_size;
    let ell = k.div_ceil(2);
    let mut points = Vec::with_capacity(config.d_grid.len());
    for (di, &d) in config.d_grid.iter().enumerate() {
        let cal = Calibration::new(config.p, d)?;
        let scale = config.rho * k as f64 / (d as f64).sqrt();
        let mut residual = RunningMoments::new();
        let mut se_sq = 0.0;
        let (mut abs_lambda, mut abs_est, mut lambda_constant) = (0.0, 0.0, 0.0f64);
        for i in 0..config.draws {
            let path = [tags::SCALING, di as u64, i as u64];
            let mut rng = stream(config.seed, &path);
            let x = sample_latents_in_s_rho(k, d, config.rho, DEFAULT_S_RHO_ATTEMPTS, &mut rng)?;
            let mc_seed = derive_seed(config.seed, &[tags::SCALING, di as u64, i as u64, 1]);
            let (lambda, est, se) = residual_for_latents(&x, &cal, config.variant, config.samples, mc_seed)?;
            residual.push((est - lambda).abs());
            se_sq += se * se;
            abs_lambda += lambda.abs();
            abs_est += est.abs();
            lambda_constant = lambda_constant.max(lambda.abs().powf(1.0 / ell as f64) / scale);
        }
        let draws = config.draws as f64;
        let mean_residual = residual.mean();
        points.push(ScalingPoint {
            d,
            mean_residual,
            residual_se: residual.std_error(),
            mc_error: (se_sq / draws).sqrt(),
            mean_abs_lambda: abs_lambda / draws,
            mean_abs_estimate: abs_est / draws,
            fitted_constant: mean_residual.powf(1.0 / (ell + 1) as f64) / scale,
            lambda_constant,
        });
    }
    let ln_d: Vec<f64> = points.iter().map(|p| (p.d as f64).ln()).collect();
    let ln_r: Vec<f64> = points.iter().map(|p| p.mean_residual.ln()).collect();
    let slope = slope(&ln_d, &ln_r);
    let slope_limit = -((ell + 1) as f64) / 2.0 + 0.5;
    let ratios = points.windows(2).map(|w| w[0].mean_residual / w[1].mean_residual).collect();
    let fitted_constant = points.iter().map(|p| p.fitted_constant).fold(0.0, f64::max);

    let mut notes = Vec::new();
    for p in &points {
        if p.mc_error >= 0.5 * p.mean_residual {
            notes.push(format!(
                "d = {}: Monte Carlo error {:.3e} is not below half the residual {:.3e}",
                p.d, p.mc_error, p.mean_residual
            ));
        }
    }
    let status = if !notes.is_empty() {
        VerificationStatus::Inconclusive
    } else {
        if slope > slope_limit {
            notes.push(format!("slope {slope:.3} exceeds {slope_limit:.3}"));
        }
        for p in &points {
            if p.mean_residual >= p.mean_abs_lambda {
                notes.push(format!(
                    "d = {}: residual {:.3e} is not below mean |Lambda| {:.3e}",
                    p.d, p.mean_residual, p.mean_abs_lambda
                ));
            }
        }
        if notes.is_empty() {
            VerificationStatus::Pass
        } else {
            VerificationStatus::Fail
        }
    };
    Ok(ScalingReport {
        config: config.clone(),
        ell,
        points,
        slope,
        slope_limit,
        ratios,
        fitted_constant,
        status,
        notes,
    })
}
