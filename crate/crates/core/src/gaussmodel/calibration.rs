//! Connection threshold and reference variance.
//!
//! For independent `x, y ~ N(0, I_d)` the normalised inner product
//! `d^{-1/2} <x, y>` is, conditionally on `s = |y| / sqrt(d)`, distributed as
//! `N(0, s^2)`, and `d s^2` is chi-square with `d` degrees of freedom. Hence
//!
//! ```text
//! F_d(t) = E_s[ Phi(t / s) ]
//! ```
//!
//! which is evaluated here by adaptive Gauss-Kronrod quadrature over the chi
//! distribution of `|y|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{brent, integrate, std_normal_cdf, std_normal_quantile, QuadSettings};

/// Half-width (in units of `|y|`) of the integration window around the chi
/// mode. The chi standard deviation is at most ~0.76, so the window spans
/// more than 13 standard deviations.
const CHI_WINDOW: f64 = 10.0;

/// Required agreement `|F_d(tau) - p|` for a calibrated threshold.
pub const TAU_TOLERANCE: f64 = 1e-9;

/// `P(d^{-1/2} <x, y> <= t)` for independent standard Gaussian `x, y` in
/// `R^d`.
pub fn inner_product_cdf(t: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if t.is_nan() {
        return Err(Error::invalid("threshold must not be NaN"));
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    if t == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    // Integrate the smaller tail so it keeps its relative accuracy.
    let tail = lower_tail(-t.abs(), d);
    Ok(if t < 0.0 { tail } else { 1.0 - tail })
}

/// `P(d^{-1/2} <x, y> <= t)` for `t < 0`.
fn lower_tail(t: f64, d: usize) -> f64 {
    debug_assert!(t < 0.0);
    chi_norm_expectation(d, |s| if s == 0.0 { 0.0 } else { std_normal_cdf(t / s) })
}

/// `E[g(s)]` for `s = |y| / sqrt(d)`, `y ~ N(0, I_d)`, by quadrature over the
/// chi distribution of `|y|`.
pub fn chi_norm_expectation(d: usize, g: impl Fn(f64) -> f64) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    let df = d as f64;
    let sqrt_d = df.sqrt();
    let mode = (df - 1.0).max(0.0).sqrt();
    let lo = (mode - CHI_WINDOW).max(0.0);
    let hi = mode + CHI_WINDOW;

    // Chi density up to a constant, normalised at the mode so that large `d`
    // does not cancel huge logarithms.
    let log_weight = move |r: f64| -> f64 {
        if d == 1 {
            -0.5 * r * r
        } else if r <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (df - 1.0) * (r / mode).ln() - 0.5 * (r * r - mode * mode)
        }
    };
    let settings = QuadSettings {
        initial_panels: 8,
        ..QuadSettings::default()
    };
    let mass = integrate(|r| log_weight(r).exp(), lo, hi, settings);
    let cond = integrate(
        |r| {
            let w = log_weight(r).exp();
            if w == 0.0 {
                return 0.0;
            }
            w * g(r / sqrt_d)
        },
        lo,
        hi,
        settings,
    );
    cond.value / mass.value
}

/// The threshold `tau` with `F_d(tau) = p`.
pub fn compute_tau(p: f64, d: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("edge density must lie in (0, 1), got {p}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let f = |t: f64| inner_product_cdf(t, d).expect("finite t, d >= 1") - p;
    let guess = std_normal_quantile(p);
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    let mut step = 1.0;
    while f(lo) > 0.0 {
        step *= 2.0;
        lo -= step;
    }
    step = 1.0;
    while f(hi) < 0.0 {
        step *= 2.0;
        hi += step;
    }
    let tau = brent(f, lo, hi, 1e-14, 200)?;
    let residual = f(tau).abs();
    if residual > TAU_TOLERANCE {
        return Err(Error::invalid(format!(
            "threshold calibration for p = {p}, d = {d} missed by {residual:e}"
        )));
    }
    Ok(tau)
}

/// `sigma_hat` with `Phi(tau / sigma_hat) = p`; exactly 1 at `p = 1/2`.
pub fn reference_variance(p: f64, d: usize, tau: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("edge density must lie in (0, 1), got {p}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if p == 0.5 {
        return Ok(1.0);
    }
    let sigma = tau / std_normal_quantile(p);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "threshold {tau} is inconsistent with density {p}"
        )));
    }
    Ok(sigma)
}

/// Threshold and reference standard deviation for one `(p, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: f64,
    pub sigma_hat: f64,
    pub p: f64,
    pub d: usize,
}

impl Calibration {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        let tau = compute_tau(p, d)?;
        let sigma_hat = reference_variance(p, d, tau)?;
        Ok(Self { tau, sigma_hat, p, d })
    }

    /// Edge threshold on the raw inner product `<x_u, x_v>`.
    #[inline]
    pub fn raw_threshold(&self) -> f64 {
        self.tau * (self.d as f64).sqrt()
    }
}
