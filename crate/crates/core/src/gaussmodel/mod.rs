//! The matrix ensembles: latent Gaussian vectors, the thresholded geometric
//! matrix, Bernoulli matrices and masks, plus threshold calibration and the
//! concentration event on Gram matrices.

mod calibration;
mod matrix;
mod sampling;

pub use calibration::{chi_norm_expectation, compute_tau, inner_product_cdf, reference_variance, Calibration, TAU_TOLERANCE};
pub use matrix::{BitMatrix, LatentMatrix};
pub use sampling::{
    apply_mask, bartlett_factor, check_s_rho, check_s_rho_gram, sample_er, sample_gram, sample_latents,
    sample_latents_in_s_rho, sample_masked_matrix, sample_rgg, sample_rgg_adjacency, sample_unknown_mask_model,
    threshold_adjacency, MaskedSample, ModelParams, RggSample, DEFAULT_S_RHO_ATTEMPTS,
};


