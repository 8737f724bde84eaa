//! Leading-order expansion of conditional signed weights and the Monte
//! Carlo and quadrature estimates it is checked against.

mod covering;
mod decay;
mod hermite;
mod lambda;
mod mc;
mod patterns;
mod scaling;
mod stars;

pub use covering::{enumerate_covering_tuples, CoveringTuple, CoveringTupleSet, MAX_ALPHA_SIZE};
pub use decay::{verify_star_decay, StarDecayPoint, StarDecayReport, StarDecayStep, STAR_SHRINK_FACTOR};
pub use hermite::{gaussian_density_derivative, hermite, MAX_HERMITE_ORDER};
pub use lambda::{leading_term_lambda, leading_term_lambda_cov, DensityVariant};
pub use patterns::{leaf_zero_check, pattern_sw_mc, LatentConditioning, LeafZeroReport};
pub use scaling::{
    residual_for_latents, verify_remainder_scaling, ScalingConfig, ScalingPoint, ScalingReport, VerificationStatus,
};
pub use stars::{
    bivariate_normal_cdf, conditional_star_sw_exact2, conditional_star_sw_exact2_cov, conditional_star_sw_mc,
    conditional_star_sw_mc_cov, unconditional_star_sw_mc, unconditional_star_sw_quadrature, EstimateMethod,
    SignedWeightEstimate, MAX_MC_LEAVES, MIN_MC_SAMPLES,
};
