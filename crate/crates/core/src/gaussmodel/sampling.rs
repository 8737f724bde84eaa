use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};

use super::calibration::Calibration;
use super::matrix::{dot, BitMatrix, LatentMatrix};
use crate::error::{Error, Result};

/// Default cap on rejection attempts for the concentration event.
pub const DEFAULT_S_RHO_ATTEMPTS: usize = 10_000;

/// Full experiment configuration of the masked model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Rows (right-hand vertex set).
    pub n: usize,
    /// Columns (left-hand vertex set).
    pub m: usize,
    /// Edge density.
    pub p: f64,
    /// Mask density.
    pub q: f64,
    /// Latent dimension.
    pub d: usize,
}

impl ModelParams {
    pub fn new(n: usize, m: usize, p: f64, q: f64, d: usize) -> Result<Self> {
        let params = Self { n, m, p, q, d };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return Err(Error::invalid(format!(
                "n, m and d must be at least 1 (got n={}, m={}, d={})",
                self.n, self.m, self.d
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::invalid(format!("q must lie in [0, 1], got {}", self.q)));
        }
        Ok(())
    }

    pub fn calibrate(&self) -> Result<Calibration> {
        Calibration::new(self.p, self.d)
    }
}

/// `count x d` matrix of i.i.d. standard normal entries.
pub fn sample_latents<R: Rng + ?Sized>(count: usize, d: usize, rng: &mut R) -> LatentMatrix {
    let values = (0..count * d).map(|_| rng.sample(StandardNormal)).collect();
    LatentMatrix::from_raw(count, d, values)
}

/// `n x m` matrix of i.i.d. `Bern(p)` entries, `p` in `[0, 1]`.
pub fn sample_er<R: Rng + ?Sized>(n: usize, m: usize, p: f64, rng: &mut R) -> Result<BitMatrix> {
    let bern = Bernoulli::new(p).map_err(|_| Error::invalid(format!("bad density {p}")))?;
    let mut out = BitMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if bern.sample(rng) {
                out.set(i, j, true);
            }
        }
    }
    Ok(out)
}

/// Entry `(u, v)` is 1 iff `<x_u, x_v> <= raw_threshold`.
pub fn threshold_adjacency(x_r: &LatentMatrix, x_l: &LatentMatrix, raw_threshold: f64) -> BitMatrix {
    assert_eq!(x_r.dim(), x_l.dim(), "latent dimensions differ");
    let mut w = BitMatrix::zeros(x_r.rows(), x_l.rows());
    for u in 0..x_r.rows() {
        let xu = x_r.row(u);
        for v in 0..x_l.rows() {
            if dot(xu, x_l.row(v)) <= raw_threshold {
                w.set(u, v, true);
            }
        }
    }
    w
}

/// One draw from the plain geometric ensemble together with its latents.
#[derive(Debug, Clone)]
pub struct RggSample {
    pub w: BitMatrix,
    pub x_r: LatentMatrix,
    pub x_l: LatentMatrix,
}

pub fn sample_rgg<R: Rng + ?Sized>(params: &ModelParams, cal: &Calibration, rng: &mut R) -> Result<RggSample> {
    check_calibration(params, cal)?;
    let x_r = sample_latents(params.n, params.d, rng);
    let x_l = sample_latents(params.m, params.d, rng);
    let w = threshold_adjacency(&x_r, &x_l, cal.raw_threshold());
    Ok(RggSample { w, x_r, x_l })
}

/// Adjacency matrix of the geometric ensemble without the latents.
///
/// Only the inner products matter, and for `d > n + m` the Gram matrix of the
/// `n + m` latents is Wishart; it is then drawn through its Bartlett factor,
/// whose rows live in `R^{n+m}`. This is equal in law to [`sample_rgg`] but
/// costs `O((n + m)^3)` instead of `O(n m d)`.
pub fn sample_rgg_adjacency<R: Rng + ?Sized>(params: &ModelParams, cal: &Calibration, rng: &mut R) -> Result<BitMatrix> {
    check_calibration(params, cal)?;
    let k = params.n + params.m;
    if params.d <= k {
        return Ok(sample_rgg(params, cal, rng)?.w);
    }
    let factor = bartlett_factor(k, params.d, rng);
    let threshold = cal.raw_threshold();
    let mut w = BitMatrix::zeros(params.n, params.m);
    for u in 0..params.n {
        // Row u of the lower-triangular factor is zero beyond column u.
        let xu = &factor.row(u)[..=u];
        for v in 0..params.m {
            let xv = &factor.row(params.n + v)[..=u];
            if dot(xu, xv) <= threshold {
                w.set(u, v, true);
            }
        }
    }
    Ok(w)
}

/// Lower-triangular `T` (stored as a `k x k` latent matrix) with `T T^T`
/// distributed as Wishart(`d`, `I_k`), `d >= k`.
pub fn bartlett_factor<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> LatentMatrix {
    assert!(d >= k, "Bartlett factor needs d >= k");
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..i {
            values[i * k + j] = rng.sample(StandardNormal);
        }
        let chi2 = ChiSquared::new((d - i) as f64).expect("positive degrees of freedom");
        values[i * k + i] = chi2.sample(rng).sqrt();
    }
    LatentMatrix::from_raw(k, k, values)
}

/// Row-major `count x count` Gram matrix of `count` i.i.d. standard Gaussian
/// vectors in `R^d`, drawn directly or through the Bartlett factor.
pub fn sample_gram<R: Rng + ?Sized>(count: usize, d: usize, rng: &mut R) -> Vec<f64> {
    if d > count {
        bartlett_factor(count, d, rng).gram()
    } else {
        sample_latents(count, d, rng).gram()
    }
}

/// Entry-wise `W` where the mask is 1 and `B` elsewhere.
pub fn apply_mask(w: &BitMatrix, mask: &BitMatrix, fill: &BitMatrix) -> Result<BitMatrix> {
    w.check_same_shape(mask)?;
    w.check_same_shape(fill)?;
    let mut out = BitMatrix::zeros(w.rows(), w.cols());
    for i in 0..w.rows() {
        let (a, k, b) = (w.row_words(i), mask.row_words(i), fill.row_words(i));
        for (o, ((&a, &k), &b)) in out.row_words_mut(i).iter_mut().zip(a.iter().zip(k).zip(b)) {
            *o = (a & k) | (b & !k);
        }
    }
    Ok(out)
}

/// One draw from the masked model with every intermediate piece.
#[derive(Debug, Clone)]
pub struct MaskedSample {
    /// Observed matrix.
    pub m: BitMatrix,
    pub mask: BitMatrix,
    pub w: BitMatrix,
    pub fill: BitMatrix,
    pub x_r: LatentMatrix,
    pub x_l: LatentMatrix,
}

/// Geometric matrix, Bern(q) mask and Bern(p) fill, combined by [`apply_mask`].
/// The same draw serves the known-mask setting when the mask is handed to the
/// test.
pub fn sample_unknown_mask_model<R: Rng + ?Sized>(
    params: &ModelParams,
    cal: &Calibration,
    rng: &mut R,
) -> Result<MaskedSample> {
    let RggSample { w, x_r, x_l } = sample_rgg(params, cal, rng)?;
    let mask = sample_er(params.n, params.m, params.q, rng)?;
    let fill = sample_er(params.n, params.m, params.p, rng)?;
    let m = apply_mask(&w, &mask, &fill)?;
    Ok(MaskedSample {
        m,
        mask,
        w,
        fill,
        x_r,
        x_l,
    })
}

/// Observed matrix and mask only, with the geometric part drawn through
/// [`sample_rgg_adjacency`].
pub fn sample_masked_matrix<R: Rng + ?Sized>(
    params: &ModelParams,
    cal: &Calibration,
    rng: &mut R,
) -> Result<(BitMatrix, BitMatrix)> {
    let w = sample_rgg_adjacency(params, cal, rng)?;
    let mask = sample_er(params.n, params.m, params.q, rng)?;
    let fill = sample_er(params.n, params.m, params.p, rng)?;
    Ok((apply_mask(&w, &mask, &fill)?, mask))
}

/// True iff `|<x_u, x_v>/d - I_{uv}| <= rho / sqrt(d)` for all row pairs,
/// with `d` the latent dimension.
pub fn check_s_rho(x: &LatentMatrix, rho: f64) -> bool {
    check_s_rho_gram(&x.gram(), x.rows(), x.dim(), rho)
}

/// [`check_s_rho`] on a precomputed `count x count` Gram matrix of vectors in
/// `R^d`.
pub fn check_s_rho_gram(gram: &[f64], count: usize, d: usize, rho: f64) -> bool {
    let df = d as f64;
    let bound = rho / df.sqrt();
    for u in 0..count {
        for v in u..count {
            let target = if u == v { 1.0 } else { 0.0 };
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !((gram[u * count + v] / df - target).abs() <= bound) {
                return false;
            }
        }
    }
    true
}

/// Rejection sampler for latents conditioned on the concentration event.
pub fn sample_latents_in_s_rho<R: Rng + ?Sized>(
    count: usize,
    d: usize,
    rho: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<LatentMatrix> {
    for _ in 0..max_attempts {
        let x = sample_latents(count, d, rng);
        if check_s_rho(&x, rho) {
            return Ok(x);
        }
    }
    Err(Error::SRhoAttemptsExceeded {
        rho,
        count,
        d,
        attempts: max_attempts,
    })
}

fn check_calibration(params: &ModelParams, cal: &Calibration) -> Result<()> {
    params.validate()?;
    if cal.p != params.p || cal.d != params.d {
        return Err(Error::invalid(format!(
            "calibration is for (p={}, d={}), model needs (p={}, d={})",
            cal.p, cal.d, params.p, params.d
        )));
    }
    Ok(())
}
