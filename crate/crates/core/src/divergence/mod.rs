//! Exact and Monte Carlo divergences between the model ensembles and the
//! Bernoulli null on tiny instances.

mod distribution;
mod expansion;

pub use distribution::{
    chi2, chi2_estimate, model_distribution_mc, null_distribution, null_distribution_with_mask, tv, Chi2Estimate,
    OutcomeDistribution, OutcomeModel, Provenance, MAX_OUTCOME_BITS, MAX_OUTCOME_CELLS, MIN_OUTCOME_DRAWS,
};
pub use expansion::{
    chi2_from_table, chi2_via_signed_weights, contrast_from_table, known_vs_unknown_contrast, oracle_chi2,
    signed_weight_table, ContrastReport, ExpansionEstimate, ExpansionMode, OracleReport, PatternTerm,
    SignedWeightTable, EXPANSION_BATCHES, MAX_EXPANSION_CELLS, MIN_EXPANSION_DRAWS,
};
