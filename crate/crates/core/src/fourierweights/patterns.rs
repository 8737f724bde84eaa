use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmodel::{sample_latents, sample_latents_in_s_rho, Calibration, ModelParams, DEFAULT_S_RHO_ATTEMPTS};
use crate::signedstats::PatternGraph;

use super::mc::batched_moments;
use super::stars::{EstimateMethod, SignedWeightEstimate, MIN_MC_SAMPLES};

/// Law of the row latents in a pattern signed-weight estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentConditioning {
    Unconditional,
    /// All `rows` row latents are drawn conditioned on the concentration
    /// event with radius `rho`.
    SRho { rho: f64, rows: usize },
}

/// `E[prod_{(i, j) in pattern} (W_ij - p)]` under the geometric model, with
/// antithetic pairs obtained by negating the column latents.
pub fn pattern_sw_mc(
    pattern: &PatternGraph,
    p: f64,
    d: usize,
    conditioning: LatentConditioning,
    samples: usize,
    seed: u64,
) -> Result<SignedWeightEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InsufficientTrials {
            need: MIN_MC_SAMPLES,
            got: samples,
        });
    }
    let cal = Calibration::new(p, d)?;
    let rows = pattern.row_vertices();
    let cols = pattern.col_vertices();
    let s_rho = match conditioning {
        LatentConditioning::Unconditional => None,
        LatentConditioning::SRho { rho, rows: n } => {
            if let Some(&r) = rows.iter().find(|&&r| r >= n) {
                return Err(Error::invalid(format!("pattern row {r} outside the {n} conditioned rows")));
            }
            Some((rho, n))
        }
    };
    let edges: Vec<(usize, usize)> = pattern
        .edges()
        .iter()
        .map(|&(i, j)| {
            let ri = match s_rho {
                Some(_) => i,
                None => rows.binary_search(&i).expect("row vertex"),
            };
            (ri, cols.binary_search(&j).expect("column vertex"))
        })
        .collect();
    let threshold = cal.raw_threshold();
    let pairs = samples.div_ceil(2);
    let failure = std::sync::Mutex::new(None);
    let moments = batched_moments(pairs, seed, |rng| {
        let x = match s_rho {
            Some((rho, n)) => match sample_latents_in_s_rho(n, d, rho, DEFAULT_S_RHO_ATTEMPTS, rng) {
                Ok(x) => x,
                Err(e) => {
                    failure.lock().expect("lock").get_or_insert(e);
                    return 0.0;
                }
            },
            None => sample_latents(rows.len(), d, rng),
        };
        let y: Vec<f64> = (0..cols.len() * d).map(|_| rng.sample(StandardNormal)).collect();
        let (mut plus, mut minus) = (1.0, 1.0);
        for &(i, j) in &edges {
            let dot: f64 = x.row(i).iter().zip(&y[j * d..(j + 1) * d]).map(|(a, b)| a * b).sum();
            plus *= if dot <= threshold { 1.0 - p } else { -p };
            minus *= if -dot <= threshold { 1.0 - p } else { -p };
        }
        0.5 * (plus + minus)
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(SignedWeightEstimate {
        value: moments.mean(),
        se: moments.std_error(),
        method: EstimateMethod::Mc,
        samples: 2 * pairs as u64,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafZeroReport {
    pub edges: Vec<(usize, usize)>,
    pub d: usize,
    pub conditioning: LatentConditioning,
    pub estimate: SignedWeightEstimate,
    /// `estimate / se`.
    pub z_score: f64,
    /// `|z_score| <= 4`.
    pub consistent_with_zero: bool,
}

/// Checks that a pattern with a leaf has zero expected signed weight at
/// `p = 1/2`.
pub fn leaf_zero_check(
    pattern: &PatternGraph,
    params: &ModelParams,
    conditioning: LatentConditioning,
    samples: usize,
    seed: u64,
) -> Result<LeafZeroReport> {
    params.validate()?;
    if params.p != 0.5 {
        return Err(Error::invalid(format!("leaf-zero check needs p = 1/2, got {}", params.p)));
    }
    if !pattern.has_leaf() {
        return Err(Error::invalid("pattern has no degree-one vertex"));
    }
    if !pattern.fits(params.n, params.m) {
        return Err(Error::invalid("pattern does not fit the n x m grid"));
    }
    let estimate = pattern_sw_mc(pattern, 0.5, params.d, conditioning, samples, seed)?;
    let z_score = if estimate.se > 0.0 {
        estimate.value / estimate.se
    } else if estimate.value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LeafZeroReport {
        edges: pattern.edges().to_vec(),
        d: params.d,
        conditioning,
        estimate,
        z_score,
        consistent_with_zero: z_score.abs() <= 4.0,
    })
}
