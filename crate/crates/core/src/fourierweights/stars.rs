//! Monte Carlo and quadrature estimates of star signed weights.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{chi_norm_expectation, Calibration, LatentMatrix};
use crate::numerics::{cholesky, integrate, std_normal_cdf, std_normal_pdf, QuadSettings};

use super::mc::batched_moments;

/// Fewest samples accepted by the Monte Carlo estimators.
pub const MIN_MC_SAMPLES: usize = 1000;
/// Largest number of leaves handled by the Monte Carlo estimators.
pub const MAX_MC_LEAVES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Mc,
    Quadrature,
    ExactBivariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedWeightEstimate {
    pub value: f64,
    /// Zero for the deterministic methods.
    pub se: f64,
    pub method: EstimateMethod,
    /// Integrand evaluations (Monte Carlo draws or quadrature nodes).
    pub samples: u64,
}

fn check_mc(samples: usize, leaves: usize) -> Result<()> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InsufficientTrials {
            need: MIN_MC_SAMPLES,
            got: samples,
        });
    }
    if leaves == 0 {
        return Err(Error::invalid("a star needs at least one leaf"));
    }
    if leaves > MAX_MC_LEAVES {
        return Err(Error::SizeCap {
            what: "star leaves",
            max: MAX_MC_LEAVES,
            got: leaves,
        });
    }
    Ok(())
}

fn centred_indicator(z: f64, tau: f64, p: f64) -> f64 {
    if z <= tau {
        1.0 - p
    } else {
        -p
    }
}

/// `E_x[prod_u (1(<x_u, x> / sqrt(d) <= tau) - p)]` over the star centre `x`,
/// for fixed leaf latents `x_alpha`. Antithetic pairs `(x, -x)`.
pub fn conditional_star_sw_mc(
    x_alpha: &LatentMatrix,
    cal: &Calibration,
    samples: usize,
    seed: u64,
) -> Result<SignedWeightEstimate> {
    let k = x_alpha.rows();
    check_mc(samples, k)?;
    let d = x_alpha.dim() as f64;
    let cov: Vec<f64> = x_alpha.gram().iter().map(|g| g / d).collect();
    if cholesky(&cov, k).is_some() {
        return conditional_star_sw_mc_cov(&cov, k, cal, samples, seed);
    }
    // Singular Gram matrix: integrate over the centre directly.
    let (tau, p) = (cal.tau, cal.p);
    let scale = 1.0 / d.sqrt();
    let pairs = samples.div_ceil(2);
    let moments = batched_moments(pairs, seed, |rng| {
        let x: Vec<f64> = (0..x_alpha.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let (mut plus, mut minus) = (1.0, 1.0);
        for u in 0..k {
            let z = scale * x_alpha.row(u).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            plus *= centred_indicator(z, tau, p);
            minus *= centred_indicator(-z, tau, p);
        }
        0.5 * (plus + minus)
    });
    Ok(SignedWeightEstimate {
        value: moments.mean(),
        se: moments.std_error(),
        method: EstimateMethod::Mc,
        samples: 2 * pairs as u64,
    })
}

/// As [`conditional_star_sw_mc`] for a positive definite covariance
/// `Sigma = X X^T / d`. The centred inner products are drawn as `L w` with
/// `L` the Cholesky factor, and the last coordinate is integrated out
/// exactly given the others.
pub fn conditional_star_sw_mc_cov(
    cov: &[f64],
    k: usize,
    cal: &Calibration,
    samples: usize,
    seed: u64,
) -> Result<SignedWeightEstimate> {
    check_mc(samples, k)?;
    let l = cholesky(cov, k).ok_or(Error::NotPositiveDefinite)?;
    let (tau, p) = (cal.tau, cal.p);
    let last = k - 1;
    let l_last = l[last * k + last];
    let pairs = samples.div_ceil(2);
    let moments = batched_moments(pairs, seed, |rng| {
        let mut w = [0.0f64; MAX_MC_LEAVES];
        for v in w.iter_mut().take(last) {
            *v = rng.sample(StandardNormal);
        }
        let (mut plus, mut minus) = (1.0, 1.0);
        for u in 0..last {
            let z: f64 = (0..=u).map(|j| l[u * k + j] * w[j]).sum();
            plus *= centred_indicator(z, tau, p);
            minus *= centred_indicator(-z, tau, p);
        }
        let mu: f64 = (0..last).map(|j| l[last * k + j] * w[j]).sum();
        plus *= std_normal_cdf((tau - mu) / l_last) - p;
        minus *= std_normal_cdf((tau + mu) / l_last) - p;
        0.5 * (plus + minus)
    });
    Ok(SignedWeightEstimate {
        value: moments.mean(),
        se: moments.std_error(),
        method: EstimateMethod::Mc,
        samples: 2 * pairs as u64,
    })
}

const BIVARIATE_CUTOFF: f64 = 40.0;

fn bivariate_cdf_with_nodes(h1: f64, h2: f64, v1: f64, v2: f64, c: f64) -> Result<(f64, usize)> {
    if !(v1 > 0.0 && v2 > 0.0) || !c.is_finite() || h1.is_nan() || h2.is_nan() {
        return Err(Error::NotPositiveDefinite);
    }
    let det = v1 * v2 - c * c;
    if det < -1e-12 * v1 * v2 {
        return Err(Error::NotPositiveDefinite);
    }
    let s1 = v1.sqrt();
    let b = c / s1;
    let cond_var = (v2 - b * b).max(0.0);
    let upper = (h1 / s1).min(BIVARIATE_CUTOFF);
    if cond_var <= 1e-14 * v2 {
        // Perfect correlation: z2 = b w with w = z1 / s1.
        let value = if b > 0.0 {
            std_normal_cdf(upper.min(h2 / b))
        } else if b < 0.0 {
            (std_normal_cdf(upper) - std_normal_cdf(h2 / b)).max(0.0)
        } else {
            std_normal_cdf(upper) * if h2 >= 0.0 { 1.0 } else { 0.0 }
        };
        return Ok((value, 0));
    }
    if upper <= -BIVARIATE_CUTOFF {
        return Ok((0.0, 0));
    }
    let cs = cond_var.sqrt();
    let settings = QuadSettings {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_nodes: 8192,
        initial_panels: 16,
    };
    let r = integrate(
        |w| std_normal_pdf(w) * std_normal_cdf((h2 - b * w) / cs),
        -BIVARIATE_CUTOFF,
        upper,
        settings,
    );
    Ok((r.value, r.nodes))
}

/// `P(z1 <= h1, z2 <= h2)` for `(z1, z2) ~ N(0, [[v1, c], [c, v2]])`, by
/// quadrature over the first coordinate of the conditional slices.
pub fn bivariate_normal_cdf(h1: f64, h2: f64, v1: f64, v2: f64, c: f64) -> Result<f64> {
    Ok(bivariate_cdf_with_nodes(h1, h2, v1, v2, c)?.0)
}

/// Two-leaf conditional signed weight by inclusion-exclusion over bivariate
/// normal orthant probabilities.
pub fn conditional_star_sw_exact2(x_alpha: &LatentMatrix, cal: &Calibration) -> Result<SignedWeightEstimate> {
    if x_alpha.rows() != 2 {
        return Err(Error::invalid(format!("expected two leaves, got {}", x_alpha.rows())));
    }
    let d = x_alpha.dim() as f64;
    let g = x_alpha.gram();
    conditional_star_sw_exact2_cov(&[g[0] / d, g[1] / d, g[2] / d, g[3] / d], cal)
}

pub fn conditional_star_sw_exact2_cov(cov: &[f64; 4], cal: &Calibration) -> Result<SignedWeightEstimate> {
    let (v1, c, v2) = (cov[0], cov[1], cov[3]);
    if (cov[1] - cov[2]).abs() > 1e-12 * (v1 + v2) {
        return Err(Error::invalid("covariance must be symmetric"));
    }
    let (tau, p) = (cal.tau, cal.p);
    let (joint, nodes) = bivariate_cdf_with_nodes(tau, tau, v1, v2, c)?;
    let value = joint - p * std_normal_cdf(tau / v1.sqrt()) - p * std_normal_cdf(tau / v2.sqrt()) + p * p;
    Ok(SignedWeightEstimate {
        value,
        se: 0.0,
        method: EstimateMethod::ExactBivariate,
        samples: nodes as u64,
    })
}

/// `E[SW(K_{1,ell})]` with every latent random: the centre norm is drawn
/// from its chi law and each leaf's inner product given the centre is
/// `N(0, s^2)`. Antithetic in the leaf draws.
pub fn unconditional_star_sw_mc(ell: usize, p: f64, d: usize, samples: usize, seed: u64) -> Result<SignedWeightEstimate> {
    check_mc(samples, ell)?;
    let cal = Calibration::new(p, d)?;
    let chi = ChiSquared::new(d as f64).map_err(|e| Error::invalid(e.to_string()))?;
    let (tau, df) = (cal.tau, d as f64);
    let pairs = samples.div_ceil(2);
    let moments = batched_moments(pairs, seed, |rng| {
        let s = (chi.sample(rng) / df).sqrt();
        let (mut plus, mut minus) = (1.0, 1.0);
        for _ in 0..ell {
            let z = s * rng.sample::<f64, _>(StandardNormal);
            plus *= centred_indicator(z, tau, p);
            minus *= centred_indicator(-z, tau, p);
        }
        0.5 * (plus + minus)
    });
    Ok(SignedWeightEstimate {
        value: moments.mean(),
        se: moments.std_error(),
        method: EstimateMethod::Mc,
        samples: 2 * pairs as u64,
    })
}

/// `E_s[(Phi(tau / s) - p)^ell]` by quadrature over the centre norm; the
/// leaves are conditionally independent given the centre.
pub fn unconditional_star_sw_quadrature(ell: usize, p: f64, d: usize) -> Result<SignedWeightEstimate> {
    if ell == 0 {
        return Err(Error::invalid("a star needs at least one leaf"));
    }
    let cal = Calibration::new(p, d)?;
    let tau = cal.tau;
    let value = chi_norm_expectation(d, |s| {
        let prob = if s > 0.0 {
            std_normal_cdf(tau / s)
        } else if tau > 0.0 {
            1.0
        } else if tau < 0.0 {
            0.0
        } else {
            0.5
        };
        (prob - p).powi(ell as i32)
    });
    Ok(SignedWeightEstimate {
        value,
        se: 0.0,
        method: EstimateMethod::Quadrature,
        samples: 0,
    })
}
