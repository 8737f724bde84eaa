//! Chi-square divergence as a sum over patterns of squared expected signed
//! weights:
//!
//! ```text
//! chi^2 = sum_{alpha != {}} q^{k |alpha|} E[SW(alpha)]^2 / (p (1 - p))^{|alpha|}
//! ```
//!
//! with `k = 2` for the observed matrix alone and `k = 1` for the
//! mask-averaged divergence when the mask is observed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::ModelParams;
use crate::rng::{stream, tags};
use crate::signedstats::PatternGraph;

use super::distribution::{
    chi2_estimate, model_distribution_mc, null_distribution, null_distribution_with_mask, sample_w_bits, tv,
    Chi2Estimate, OutcomeModel,
};

/// Largest `n * m` for the pattern expansion.
pub const MAX_EXPANSION_CELLS: usize = 9;
/// Fewest latent draws accepted for the pattern expansion.
pub const MIN_EXPANSION_DRAWS: usize = 100_000;
/// Number of independent batches the latent draws are split into.
pub const EXPANSION_BATCHES: usize = 100;
/// Relative standard error above which a dominant term marks the estimate
/// inconclusive.
pub const MAX_DOMINANT_RELATIVE_ERROR: f64 = 0.3;
/// A term is dominant when it carries at least this share of the total.
pub const DOMINANT_SHARE: f64 = 0.1;

/// Which power of `q` weighs each pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    /// `q^{2 |alpha|}`.
    Unknown,
    /// `q^{|alpha|}`.
    Known,
}

impl ExpansionMode {
    fn exponent(self) -> i32 {
        match self {
            ExpansionMode::Unknown => 2,
            ExpansionMode::Known => 1,
        }
    }
}

/// Batch means of `SW(alpha)` for every nonempty pattern `alpha` of
/// `K_{n,m}`, all computed on shared latent draws. Pattern `alpha` is
/// stored at index `bits(alpha) - 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignedWeightTable {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub d: usize,
    pub draws: usize,
    pub seed: u64,
    /// `batch_means[b][alpha - 1]`.
    pub batch_means: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// Standard error of each mean from the spread of the batch means.
    pub std_errors: Vec<f64>,
}

/// Draws `draws` latent configurations and records every pattern's signed
/// weight. Batch `b` uses `stream(seed, &[LATENT_BATCH, b])`.
pub fn signed_weight_table(n: usize, m: usize, p: f64, d: usize, draws: usize, seed: u64) -> Result<SignedWeightTable> {
    let params = ModelParams::new(n, m, p, 1.0, d)?;
    let cells = n * m;
    if cells > MAX_EXPANSION_CELLS {
        return Err(Error::SizeCap {
            what: "n * m for the pattern expansion",
            max: MAX_EXPANSION_CELLS,
            got: cells,
        });
    }
    if draws < MIN_EXPANSION_DRAWS {
        return Err(Error::InsufficientTrials {
            need: MIN_EXPANSION_DRAWS,
            got: draws,
        });
    }
    let cal = params.calibrate()?;
    let threshold = cal.raw_threshold();
    let patterns = (1usize << cells) - 1;
    let per_batch = draws / EXPANSION_BATCHES;
    let draws = per_batch * EXPANSION_BATCHES;
    let batch_means: Vec<Vec<f64>> = (0..EXPANSION_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[tags::LATENT_BATCH, b as u64]);
            let mut sums = vec![0.0; patterns];
            let mut prod = vec![1.0; patterns + 1];
            for _ in 0..per_batch {
                let w = sample_w_bits(n, m, d, threshold, &mut rng);
                for alpha in 1..=patterns {
                    let e = alpha.trailing_zeros() as usize;
                    let centred = if w >> e & 1 == 1 { 1.0 - p } else { -p };
                    prod[alpha] = prod[alpha & (alpha - 1)] * centred;
                    sums[alpha - 1] += prod[alpha];
                }
            }
            sums.iter().map(|s| s / per_batch as f64).collect()
        })
        .collect();
    let nb = EXPANSION_BATCHES as f64;
    let means: Vec<f64> = (0..patterns)
        .map(|a| batch_means.iter().map(|row| row[a]).sum::<f64>() / nb)
        .collect();
    let std_errors = (0..patterns)
        .map(|a| {
            let ss: f64 = batch_means.iter().map(|row| (row[a] - means[a]).powi(2)).sum();
            (ss / (nb - 1.0) / nb).sqrt()
        })
        .collect();
    Ok(SignedWeightTable {
        n,
        m,
        p,
        d,
        draws,
        seed,
        batch_means,
        means,
        std_errors,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternTerm {
    pub edges: Vec<(usize, usize)>,
    pub size: usize,
    pub mean_signed_weight: f64,
    pub signed_weight_se: f64,
    /// `q^{k |alpha|} / (p (1 - p))^{|alpha|}`.
    pub coefficient: f64,
    /// Coefficient times the bias-corrected squared mean.
    pub term: f64,
    /// Coefficient times the plain squared mean.
    pub plug_in_term: f64,
    pub term_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionEstimate {
    pub mode: ExpansionMode,
    pub q: f64,
    /// Sum of bias-corrected terms.
    pub value: f64,
    /// First-order standard error over the batches, including correlations
    /// between patterns.
    pub se: f64,
    pub plug_in_value: f64,
    pub inconclusive: bool,
    pub terms: Vec<PatternTerm>,
}

/// Weighs the shared signed-weight estimates for mask density `q`.
pub fn chi2_from_table(table: &SignedWeightTable, q: f64, mode: ExpansionMode) -> Result<ExpansionEstimate> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("q must lie in [0, 1], got {q}")));
    }
    let pq = table.p * (1.0 - table.p);
    let nb = table.batch_means.len() as f64;
    let mut terms = Vec::with_capacity(table.means.len());
    for (a, (&mean, &se)) in table.means.iter().zip(&table.std_errors).enumerate() {
        let alpha = a + 1;
        let size = alpha.count_ones() as i32;
        let coefficient = q.powi(mode.exponent() * size) / pq.powi(size);
        let edges = PatternGraph::from_bits(table.n, table.m, alpha as u64)?.edges().to_vec();
        terms.push(PatternTerm {
            edges,
            size: size as usize,
            mean_signed_weight: mean,
            signed_weight_se: se,
            coefficient,
            term: coefficient * (mean * mean - se * se),
            plug_in_term: coefficient * mean * mean,
            term_se: 2.0 * coefficient * mean.abs() * se,
        });
    }
    // Linearised total per batch; its spread gives the joint error.
    let linear: Vec<f64> = table
        .batch_means
        .iter()
        .map(|row| terms.iter().zip(row).map(|(t, x)| 2.0 * t.coefficient * t.mean_signed_weight * x).sum())
        .collect();
    let lm = linear.iter().sum::<f64>() / nb;
    let se = (linear.iter().map(|x| (x - lm).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt();
    let value: f64 = terms.iter().map(|t| t.term).sum();
    let plug_in_value = terms.iter().map(|t| t.plug_in_term).sum();
    let inconclusive = terms.iter().any(|t| {
        t.term.abs() >= DOMINANT_SHARE * value.abs() && t.term_se > MAX_DOMINANT_RELATIVE_ERROR * t.term.abs()
    });
    Ok(ExpansionEstimate {
        mode,
        q,
        value,
        se,
        plug_in_value,
        inconclusive,
        terms,
    })
}

/// Pattern expansion of the chi-square divergence with freshly drawn
/// signed-weight estimates.
pub fn chi2_via_signed_weights(
    params: &ModelParams,
    mode: ExpansionMode,
    draws: usize,
    seed: u64,
) -> Result<ExpansionEstimate> {
    params.validate()?;
    let table = signed_weight_table(params.n, params.m, params.p, params.d, draws, seed)?;
    chi2_from_table(&table, params.q, mode)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastReport {
    pub params: ModelParams,
    pub draws: usize,
    pub seed: u64,
    pub known: ExpansionEstimate,
    pub unknown: ExpansionEstimate,
    /// Known over unknown term for every pattern with a nonzero term.
    pub term_ratios: Vec<f64>,
    /// Largest relative deviation of a ratio from `q^{-|alpha|}`.
    pub max_ratio_deviation: f64,
    /// Plug-in known terms dominate plug-in unknown terms everywhere.
    pub termwise_dominance: bool,
    pub known_exceeds_unknown: bool,
}

/// Both expansion modes on the same signed-weight estimates.
pub fn known_vs_unknown_contrast(params: &ModelParams, draws: usize, seed: u64) -> Result<ContrastReport> {
    params.validate()?;
    let table = signed_weight_table(params.n, params.m, params.p, params.d, draws, seed)?;
    contrast_from_table(params, &table)
}

pub fn contrast_from_table(params: &ModelParams, table: &SignedWeightTable) -> Result<ContrastReport> {
    let known = chi2_from_table(table, params.q, ExpansionMode::Known)?;
    let unknown = chi2_from_table(table, params.q, ExpansionMode::Unknown)?;
    let mut term_ratios = Vec::new();
    let mut max_ratio_deviation = 0.0f64;
    let mut termwise_dominance = true;
    for (k, u) in known.terms.iter().zip(&unknown.terms) {
        termwise_dominance &= k.plug_in_term >= u.plug_in_term;
        if u.term != 0.0 {
            let ratio = k.term / u.term;
            let expected = params.q.powi(-(k.size as i32));
            max_ratio_deviation = max_ratio_deviation.max((ratio / expected - 1.0).abs());
            term_ratios.push(ratio);
        }
    }
    Ok(ContrastReport {
        params: *params,
        draws: table.draws,
        seed: table.seed,
        known_exceeds_unknown: known.value >= unknown.value,
        known,
        unknown,
        term_ratios,
        max_ratio_deviation,
        termwise_dominance,
    })
}

/// Direct and expanded chi-square divergences for one small instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: ModelParams,
    pub outcome_draws: usize,
    pub latent_draws: usize,
    pub seed: u64,
    pub direct_unknown: Chi2Estimate,
    pub tv_unknown: f64,
    pub direct_known: Option<Chi2Estimate>,
    pub contrast: ContrastReport,
    /// `|direct - expansion| / combined se` for the unknown-mask mode.
    pub unknown_z: f64,
    pub known_z: Option<f64>,
    pub pinsker_holds: bool,
}

/// Compares the directly sampled chi-square divergence with the pattern
/// expansion. The outcome draws use `seed` and the latent draws
/// `seed + 1`; the known-mask comparison is skipped when the joint outcome
/// space is too large.
pub fn oracle_chi2(params: &ModelParams, outcome_draws: usize, latent_draws: usize, seed: u64) -> Result<OracleReport> {
    params.validate()?;
    let null = null_distribution(params.n, params.m, params.p)?;
    let sampled = model_distribution_mc(params, OutcomeModel::UnknownMask, outcome_draws, seed)?;
    let direct_unknown = chi2_estimate(&sampled, &null)?;
    let tv_unknown = tv(&sampled, &null)?;
    let direct_known = match null_distribution_with_mask(params.n, params.m, params.p, params.q) {
        Ok(joint_null) => {
            let joint = model_distribution_mc(params, OutcomeModel::KnownMaskAveraged, outcome_draws, seed)?;
            Some(chi2_estimate(&joint, &joint_null)?)
        }
        Err(Error::SizeCap { .. }) => None,
        Err(e) => return Err(e),
    };
    let table = signed_weight_table(params.n, params.m, params.p, params.d, latent_draws, seed.wrapping_add(1))?;
    let contrast = contrast_from_table(params, &table)?;
    let z = |direct: &Chi2Estimate, expansion: &ExpansionEstimate| {
        (direct.value - expansion.value).abs() / direct.se.hypot(expansion.se)
    };
    Ok(OracleReport {
        params: *params,
        outcome_draws,
        latent_draws: table.draws,
        seed,
        unknown_z: z(&direct_unknown, &contrast.unknown),
        known_z: direct_known.as_ref().map(|k| z(k, &contrast.known)),
        pinsker_holds: 2.0 * tv_unknown * tv_unknown <= direct_unknown.value + 3.0 * direct_unknown.se,
        direct_unknown,
        tv_unknown,
        direct_known,
        contrast,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_zero_gives_zero() {
        let params = ModelParams::new(2, 2, 0.3, 0.0, 3).unwrap();
        let e = chi2_via_signed_weights(&params, ExpansionMode::Unknown, 100_000, 1).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.terms.len(), 15);
    }

    #[test]
    fn size_caps() {
        let params = ModelParams::new(2, 5, 0.3, 1.0, 3).unwrap();
        assert!(chi2_via_signed_weights(&params, ExpansionMode::Unknown, 100_000, 1).is_err());
        let params = ModelParams::new(1, 1, 0.3, 1.0, 3).unwrap();
        assert!(chi2_via_signed_weights(&params, ExpansionMode::Unknown, 99_999, 1).is_err());
    }

    #[test]
    fn single_edge_matches_direct() {
        // With one cell the geometric entry is exactly Bern(p), so both sides vanish.
        let params = ModelParams::new(1, 1, 0.3, 0.7, 3).unwrap();
        let r = oracle_chi2(&params, 200_000, 200_000, 3).unwrap();
        assert!(r.unknown_z <= 3.0, "{r:?}");
        assert!(r.contrast.unknown.value.abs() < 1e-4);
    }

    #[test]
    fn contrast_identities() {
        let params = ModelParams::new(2, 2, 0.5, 0.5, 5).unwrap();
        let c = known_vs_unknown_contrast(&params, 200_000, 4).unwrap();
        assert!(c.max_ratio_deviation < 1e-12);
        assert!(c.termwise_dominance);
        assert!(c.known_exceeds_unknown);
        let params = ModelParams::new(2, 2, 0.5, 1.0, 5).unwrap();
        let c = known_vs_unknown_contrast(&params, 100_000, 4).unwrap();
        assert_eq!(c.known.value, c.unknown.value);
    }

    #[test]
    fn expansion_agrees_with_direct_small() {
        let params = ModelParams::new(1, 2, 0.3, 1.0, 2).unwrap();
        let r = oracle_chi2(&params, 400_000, 400_000, 5).unwrap();
        assert!(r.unknown_z <= 3.0, "{r:?}");
        assert!(r.known_z.unwrap() <= 3.0, "{r:?}");
    }
}
