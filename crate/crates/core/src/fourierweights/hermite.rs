use crate::error::{Error, Result};
use crate::numerics::std_normal_pdf;

/// Largest supported Hermite degree / derivative order.
pub const MAX_HERMITE_ORDER: usize = 64;

fn check_order(k: usize) -> Result<()> {
    if k > MAX_HERMITE_ORDER {
        return Err(Error::SizeCap {
            what: "Hermite order",
            max: MAX_HERMITE_ORDER,
            got: k,
        });
    }
    Ok(())
}

/// Probabilists' Hermite polynomial `He_k(x)` by the three-term recurrence
/// `He_{k+1} = x He_k - k He_{k-1}`.
pub fn hermite(k: usize, x: f64) -> Result<f64> {
    check_order(k)?;
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return Ok(prev);
    }
    for j in 1..k {
        (prev, cur) = (cur, x * cur - j as f64 * prev);
    }
    Ok(cur)
}

/// `s`-th derivative of the `N(0, sigma^2)` density at `x`:
/// `(-1)^s sigma^{-s} He_s(x / sigma) phi_sigma(x)`.
pub fn gaussian_density_derivative(s: usize, x: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let u = x / sigma;
    let sign = if s.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * sigma.powi(-(s as i32)) * hermite(s, u)? * std_normal_pdf(u) / sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(hermite(0, 0.3).unwrap(), 1.0);
        assert_eq!(hermite(1, 0.3).unwrap(), 0.3);
        assert!((hermite(2, 1.5).unwrap() - 1.25).abs() < 1e-15);
        assert!(hermite(65, 0.0).is_err());
    }

    #[test]
    fn explicit_coefficients() {
        let table: [&[f64]; 9] = [
            &[1.0],
            &[0.0, 1.0],
            &[-1.0, 0.0, 1.0],
            &[0.0, -3.0, 0.0, 1.0],
            &[3.0, 0.0, -6.0, 0.0, 1.0],
            &[0.0, 15.0, 0.0, -10.0, 0.0, 1.0],
            &[-15.0, 0.0, 45.0, 0.0, -15.0, 0.0, 1.0],
            &[0.0, -105.0, 0.0, 105.0, 0.0, -21.0, 0.0, 1.0],
            &[105.0, 0.0, -420.0, 0.0, 210.0, 0.0, -28.0, 0.0, 1.0],
        ];
        for (k, coeffs) in table.iter().enumerate() {
            for &x in &[-2.3, -0.4, 0.0, 0.7, 1.9] {
                let poly: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
                assert!((hermite(k, x).unwrap() - poly).abs() < 1e-10, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn growth_bound() {
        let k = 6.0f64;
        let bound = 2f64.powf(k / 2.0) * 720f64.sqrt() * ((2.0 * k).sqrt() * 2.0).exp();
        assert!(hermite(6, 2.0).unwrap().abs() <= bound);
        for k in 0..=30usize {
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            for &x in &[-3.0, -1.0, 0.5, 2.5] {
                let bound = 2f64.powf(k as f64 / 2.0) * fact.sqrt() * ((2.0 * k as f64).sqrt() * f64::abs(x)).exp();
                assert!(hermite(k, x).unwrap().abs() <= bound, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn density_derivatives() {
        let tau = -0.52;
        let phi = std_normal_pdf(tau);
        assert!((gaussian_density_derivative(0, tau, 1.0).unwrap() - phi).abs() < 1e-15);
        assert!((gaussian_density_derivative(1, tau, 1.0).unwrap() + tau * phi).abs() < 1e-15);
        assert!(gaussian_density_derivative(1, tau, 0.0).is_err());

        let (sigma, x, h) = (0.9, 0.7, 1e-4);
        // Second derivative written out by hand, differenced once more.
        let f2 = |t: f64| {
            let density = (-0.5 * t * t / (sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            (t * t / (sigma * sigma) - 1.0) / (sigma * sigma) * density
        };
        let fd = (f2(x + h) - f2(x - h)) / (2.0 * h);
        let exact = gaussian_density_derivative(3, x, sigma).unwrap();
        assert!(((fd - exact) / exact).abs() <= 1e-5, "{fd} vs {exact}");
    }
}
