use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{sample_gram, ModelParams};
use crate::rng::{stream, tags};

/// Largest `n * m` for a single-matrix outcome space.
pub const MAX_OUTCOME_CELLS: usize = 14;
/// Largest number of bits in any outcome space (the joint matrix-and-mask
/// space uses `2 n m`).
pub const MAX_OUTCOME_BITS: usize = 16;
/// Fewest draws accepted by [`model_distribution_mc`].
pub const MIN_OUTCOME_DRAWS: usize = 100_000;
const DRAWS_PER_BATCH: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Mc { samples: u64 },
}

/// Which ensemble [`model_distribution_mc`] draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeModel {
    /// Observed matrix of the masked model.
    UnknownMask,
    /// Observed matrix together with the mask. Its chi-square divergence from
    /// the product of the Bernoulli null and the mask law is the
    /// mask-averaged chi-square divergence of the conditional laws.
    KnownMaskAveraged,
    /// Geometric matrix without mask.
    PureRgg,
}

/// Probability vector over bit patterns. Outcome `i` sets bit `r * m + c`
/// for every one-entry `(r, c)` of the matrix; in the joint space the mask
/// occupies the next `n * m` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub n: usize,
    pub m: usize,
    pub bits: usize,
    pub probs: Vec<f64>,
    pub provenance: Provenance,
    /// Per-outcome binomial standard errors of Monte Carlo frequencies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
}

impl OutcomeDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn samples(&self) -> Option<u64> {
        match self.provenance {
            Provenance::Exact => None,
            Provenance::Mc { samples } => Some(samples),
        }
    }

    /// Relabels every outcome by permuting matrix rows and columns (and the
    /// mask with them); `row_perm[i]` is the new index of row `i`.
    pub fn relabeled(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        let (n, m) = (self.n, self.m);
        let valid = |perm: &[usize], len| {
            let mut seen = vec![false; len];
            perm.len() == len && perm.iter().all(|&i| i < len && !std::mem::replace(&mut seen[i], true))
        };
        if !valid(row_perm, n) || !valid(col_perm, m) {
            return Err(Error::invalid("relabeling must be a permutation of rows and columns"));
        }
        let layers = self.bits / (n * m);
        let map = |idx: usize| -> usize {
            let mut out = 0;
            for layer in 0..layers {
                for (r, &pr) in row_perm.iter().enumerate() {
                    for (c, &pc) in col_perm.iter().enumerate() {
                        if idx >> (layer * n * m + r * m + c) & 1 == 1 {
                            out |= 1 << (layer * n * m + pr * m + pc);
                        }
                    }
                }
            }
            out
        };
        let mut probs = vec![0.0; self.probs.len()];
        let mut errs = self.std_errors.as_ref().map(|e| vec![0.0; e.len()]);
        for i in 0..self.probs.len() {
            let j = map(i);
            probs[j] = self.probs[i];
            if let (Some(out), Some(src)) = (errs.as_mut(), self.std_errors.as_ref()) {
                out[j] = src[i];
            }
        }
        Ok(Self {
            probs,
            std_errors: errs,
            ..self.clone()
        })
    }
}

fn check_cells(n: usize, m: usize, layers: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n and m must be at least 1"));
    }
    if n * m > MAX_OUTCOME_CELLS {
        return Err(Error::SizeCap {
            what: "n * m for outcome distributions",
            max: MAX_OUTCOME_CELLS,
            got: n * m,
        });
    }
    if layers * n * m > MAX_OUTCOME_BITS {
        return Err(Error::SizeCap {
            what: "outcome bits",
            max: MAX_OUTCOME_BITS,
            got: layers * n * m,
        });
    }
    Ok(())
}

fn product_measure(bits: usize, p: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..1usize << bits)
        .map(|i| (0..bits).map(|b| if i >> b & 1 == 1 { p(b) } else { 1.0 - p(b) }).product())
        .collect()
}

/// Exact law of an `n x m` matrix of i.i.d. Bern(p) entries.
pub fn null_distribution(n: usize, m: usize, p: f64) -> Result<OutcomeDistribution> {
    check_cells(n, m, 1)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(OutcomeDistribution {
        n,
        m,
        bits: n * m,
        probs: product_measure(n * m, |_| p),
        provenance: Provenance::Exact,
        std_errors: None,
    })
}

/// Exact law of an i.i.d. Bern(p) matrix paired with an independent Bern(q)
/// mask, on the joint outcome space.
pub fn null_distribution_with_mask(n: usize, m: usize, p: f64, q: f64) -> Result<OutcomeDistribution> {
    check_cells(n, m, 2)?;
    if !(p > 0.0 && p < 1.0) || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("need 0 < p < 1 and 0 <= q <= 1, got p = {p}, q = {q}")));
    }
    let cells = n * m;
    Ok(OutcomeDistribution {
        n,
        m,
        bits: 2 * cells,
        probs: product_measure(2 * cells, |b| if b < cells { p } else { q }),
        provenance: Provenance::Exact,
        std_errors: None,
    })
}

/// One draw of the geometric matrix as packed bits, through the Gram matrix
/// of all `n + m` latents.
pub(crate) fn sample_w_bits<R: Rng + ?Sized>(n: usize, m: usize, d: usize, raw_threshold: f64, rng: &mut R) -> u64 {
    let k = n + m;
    let gram = sample_gram(k, d, rng);
    let mut bits = 0u64;
    for i in 0..n {
        for j in 0..m {
            if gram[i * k + n + j] <= raw_threshold {
                bits |= 1 << (i * m + j);
            }
        }
    }
    bits
}

fn bernoulli_bits<R: Rng + ?Sized>(cells: usize, prob: f64, rng: &mut R) -> u64 {
    (0..cells).fold(0, |acc, b| acc | ((rng.random::<f64>() < prob) as u64) << b)
}

/// Empirical outcome frequencies of `model` over `trials` draws. Batch `b`
/// of the draws uses `stream(seed, &[OUTCOME_BATCH, b])`.
pub fn model_distribution_mc(
    params: &ModelParams,
    model: OutcomeModel,
    trials: usize,
    seed: u64,
) -> Result<OutcomeDistribution> {
    params.validate()?;
    let layers = if model == OutcomeModel::KnownMaskAveraged { 2 } else { 1 };
    check_cells(params.n, params.m, layers)?;
    if trials < MIN_OUTCOME_DRAWS {
        return Err(Error::InsufficientTrials {
            need: MIN_OUTCOME_DRAWS,
            got: trials,
        });
    }
    let cal = params.calibrate()?;
    let (n, m, p, q, d) = (params.n, params.m, params.p, params.q, params.d);
    let cells = n * m;
    let bits = layers * cells;
    let threshold = cal.raw_threshold();
    let batches = trials.div_ceil(DRAWS_PER_BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[tags::OUTCOME_BATCH, b as u64]);
            let mut counts = vec![0u64; 1 << bits];
            let len = DRAWS_PER_BATCH.min(trials - b * DRAWS_PER_BATCH);
            for _ in 0..len {
                let w = sample_w_bits(n, m, d, threshold, &mut rng);
                let idx = match model {
                    OutcomeModel::PureRgg => w,
                    OutcomeModel::UnknownMask | OutcomeModel::KnownMaskAveraged => {
                        let mask = bernoulli_bits(cells, q, &mut rng);
                        let fill = bernoulli_bits(cells, p, &mut rng);
                        let observed = (w & mask) | (fill & !mask);
                        if model == OutcomeModel::UnknownMask {
                            observed
                        } else {
                            observed | mask << cells
                        }
                    }
                };
                counts[idx as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; 1 << bits],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = trials as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let std_errors = probs.iter().map(|&f| (f * (1.0 - f) / total).sqrt()).collect();
    Ok(OutcomeDistribution {
        n,
        m,
        bits,
        probs,
        provenance: Provenance::Mc { samples: trials as u64 },
        std_errors: Some(std_errors),
    })
}

fn same_space(a: &OutcomeDistribution, b: &OutcomeDistribution) -> Result<()> {
    if a.len() != b.len() || a.n != b.n || a.m != b.m {
        return Err(Error::OutcomeSpaceMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Total variation distance `sum |a - b| / 2`.
pub fn tv(a: &OutcomeDistribution, b: &OutcomeDistribution) -> Result<f64> {
    same_space(a, b)?;
    Ok((0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

/// `chi^2(a || b) = sum a^2 / b - 1`.
pub fn chi2(a: &OutcomeDistribution, b: &OutcomeDistribution) -> Result<f64> {
    same_space(a, b)?;
    let mut s = 0.0;
    for (i, (&x, &y)) in a.probs.iter().zip(&b.probs).enumerate() {
        if x > 0.0 {
            if y <= 0.0 {
                return Err(Error::SupportViolation(i));
            }
            s += x * x / y;
        }
    }
    Ok(s - 1.0)
}

/// Chi-square divergence of a Monte Carlo frequency vector from an exact
/// reference, with the bias of the squared frequencies removed and a
/// multinomial delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Estimate {
    pub value: f64,
    pub se: f64,
    /// Value of the plain plug-in formula.
    pub plug_in: f64,
}

pub fn chi2_estimate(sampled: &OutcomeDistribution, reference: &OutcomeDistribution) -> Result<Chi2Estimate> {
    let plug_in = chi2(sampled, reference)?;
    let n = sampled
        .samples()
        .ok_or_else(|| Error::invalid("the sampled distribution must come from Monte Carlo"))? as f64;
    let mut unbiased = 0.0;
    let (mut first, mut second) = (0.0, 0.0);
    for (&f, &r) in sampled.probs.iter().zip(&reference.probs) {
        if f > 0.0 {
            unbiased += f * (n * f - 1.0) / ((n - 1.0) * r);
            let g = 2.0 * f / r;
            first += f * g;
            second += f * g * g;
        }
    }
    Ok(Chi2Estimate {
        value: unbiased - 1.0,
        se: ((second - first * first).max(0.0) / n).sqrt(),
        plug_in,
    })
}
