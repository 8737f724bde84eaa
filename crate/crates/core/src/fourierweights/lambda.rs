//! Leading-order polynomial for the conditional signed weight of a star.
//!
//! For a star whose leaves carry latents `x_1, ..., x_k` and whose centre is
//! integrated out, the centred inner products are jointly `N(0, Sigma)` with
//! `Sigma = X X^T / d`. Expanding the orthant probability around
//! `sigma_hat^2 I` with the heat equation gives
//!
//! ```text
//! Lambda = 1 / (2^l l!) * sum_{r_1..r_l} prod_j Delta_{r_j} * prod_e phi^{(s_e - 1)}(tau)
//! ```
//!
//! where `l = ceil(k / 2)`, `Delta = Sigma - sigma_hat^2 I`, the sum runs over
//! covering tuples and `s_e` is the number of times leaf `e` occurs in the
//! tuple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{Calibration, LatentMatrix};

use super::covering::enumerate_covering_tuples;
use super::hermite::gaussian_density_derivative;

/// Which Gaussian density the derivative factors use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityVariant {
    /// `N(0, sigma_hat^2)`.
    #[default]
    ReferenceVariance,
    /// `N(0, 1)`.
    Standard,
}

/// `Lambda` for the leaf latents `x_alpha` (one row per leaf).
pub fn leading_term_lambda(x_alpha: &LatentMatrix, cal: &Calibration, variant: DensityVariant) -> Result<f64> {
    let k = x_alpha.rows();
    let d = x_alpha.dim() as f64;
    let cov: Vec<f64> = x_alpha.gram().iter().map(|g| g / d).collect();
    leading_term_lambda_cov(&cov, k, cal, variant)
}

/// `Lambda` from the normalised Gram matrix `Sigma` (row-major `k x k`).
pub fn leading_term_lambda_cov(cov: &[f64], k: usize, cal: &Calibration, variant: DensityVariant) -> Result<f64> {
    if cov.len() != k * k {
        return Err(Error::invalid(format!("expected a {k}x{k} matrix, got {} entries", cov.len())));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariance entries must be finite"));
    }
    let set = enumerate_covering_tuples(k)?;
    let s2 = cal.sigma_hat * cal.sigma_hat;
    let delta = |a: u8, b: u8| {
        let (a, b) = (a as usize, b as usize);
        cov[a * k + b] - if a == b { s2 } else { 0.0 }
    };
    let sigma = match variant {
        DensityVariant::ReferenceVariance => cal.sigma_hat,
        DensityVariant::Standard => 1.0,
    };
    // derivs[s] = phi^{(s - 1)}(tau); multiplicities never exceed 2l.
    let derivs: Vec<f64> = (0..=2 * set.ell)
        .map(|s| {
            if s == 0 {
                Ok(0.0)
            } else {
                gaussian_density_derivative(s - 1, cal.tau, sigma)
            }
        })
        .collect::<Result<_>>()?;
    let total: f64 = set
        .tuples
        .iter()
        .map(|t| {
            let deltas: f64 = t.pairs.iter().map(|&(a, b)| delta(a, b)).product();
            let phis: f64 = t.multiplicities.iter().map(|&s| derivs[s as usize]).product();
            deltas * phis
        })
        .sum();
    let ell = set.ell as i32;
    let factorial: f64 = (1..=set.ell).map(|j| j as f64).product();
    Ok(total / (2f64.powi(ell) * factorial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmodel::sample_latents;
    use crate::numerics::std_normal_pdf;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn single_leaf() {
        let cal = Calibration::new(0.3, 50).unwrap();
        let x = LatentMatrix::from_rows(&[vec![1.2; 50]]).unwrap();
        let v = 1.44;
        let expected = 0.5
            * (v - cal.sigma_hat * cal.sigma_hat)
            * gaussian_density_derivative(1, cal.tau, cal.sigma_hat).unwrap();
        let got = leading_term_lambda(&x, &cal, DensityVariant::ReferenceVariance).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn two_leaves() {
        let d = 4;
        let cal = Calibration::new(0.5, d).unwrap();
        let orth = LatentMatrix::from_rows(&[vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        assert_eq!(leading_term_lambda(&orth, &cal, DensityVariant::ReferenceVariance).unwrap(), 0.0);

        let cal = Calibration::new(0.3, 20).unwrap();
        let cov = [1.1, 0.13, 0.13, 0.92];
        let phi = gaussian_density_derivative(0, cal.tau, cal.sigma_hat).unwrap();
        let hand = 0.5 * (0.13 * phi * phi + 0.13 * phi * phi);
        let got = leading_term_lambda_cov(&cov, 2, &cal, DensityVariant::ReferenceVariance).unwrap();
        assert!((got - hand).abs() < 1e-15);
        let std_phi = std_normal_pdf(cal.tau);
        let got = leading_term_lambda_cov(&cov, 2, &cal, DensityVariant::Standard).unwrap();
        assert!((got - 0.13 * std_phi * std_phi).abs() < 1e-15);
    }

    #[test]
    fn three_leaves_by_hand() {
        let cal = Calibration::new(0.3, 30).unwrap();
        let sh2 = cal.sigma_hat * cal.sigma_hat;
        let cov = [1.05, 0.1, -0.07, 0.1, 0.97, 0.04, -0.07, 0.04, 1.02];
        let dl = |a: usize, b: usize| cov[a * 3 + b] - if a == b { sh2 } else { 0.0 };
        let f = |s: usize| gaussian_density_derivative(s - 1, cal.tau, cal.sigma_hat).unwrap();
        let mut hand = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for e in 0..3 {
                        let mut s = [0usize; 3];
                        for v in [a, b, c, e] {
                            s[v] += 1;
                        }
                        if s.iter().all(|&x| x > 0) {
                            hand += dl(a, b) * dl(c, e) * f(s[0]) * f(s[1]) * f(s[2]);
                        }
                    }
                }
            }
        }
        hand /= 8.0;
        let got = leading_term_lambda_cov(&cov, 3, &cal, DensityVariant::ReferenceVariance).unwrap();
        assert!((got - hand).abs() < 1e-14);
    }

    fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Vec<f64> {
        let g = sample_latents(d, d, rng);
        let mut q: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            let mut v = g.row(i).to_vec();
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
        }
        q.concat()
    }

    #[test]
    fn rotation_invariance() {
        let mut rng = stream(41, &[0]);
        let d = 12;
        let cal = Calibration::new(0.3, d).unwrap();
        for k in 1..=4 {
            let x = sample_latents(k, d, &mut rng);
            let q = random_orthogonal(d, &mut rng);
            let rotated = x.map_rows(|row| (0..d).map(|i| (0..d).map(|j| q[i * d + j] * row[j]).sum()).collect());
            let a = leading_term_lambda(&x, &cal, DensityVariant::ReferenceVariance).unwrap();
            let b = leading_term_lambda(&rotated, &cal, DensityVariant::ReferenceVariance).unwrap();
            assert!((a - b).abs() < 1e-10, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn matches_exact_bivariate_weight_at_large_d() {
        use crate::fourierweights::conditional_star_sw_exact2;
        use crate::gaussmodel::sample_latents_in_s_rho;
        let d = 4096;
        let mut rng = stream(59, &[4]);
        for p in [0.3, 0.5] {
            let cal = Calibration::new(p, d).unwrap();
            for _ in 0..10 {
                let x = sample_latents_in_s_rho(2, d, 3.0, 1000, &mut rng).unwrap();
                let lambda = leading_term_lambda(&x, &cal, DensityVariant::ReferenceVariance).unwrap();
                let exact = conditional_star_sw_exact2(&x, &cal).unwrap().value;
                assert!((exact - lambda).abs() < 0.1 * lambda.abs() + 1e-5, "p={p}: {exact} vs {lambda}");
            }
        }
    }
}
