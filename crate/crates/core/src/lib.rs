//! Simulation and verification toolkit for masked bipartite Gaussian random
//! geometric graphs.
//!
//! * [`gaussmodel`] samples latent vectors, geometric matrices, masks and
//!   Bernoulli fills, and calibrates the connection threshold.
//! * [`signedstats`] computes signed wedge and signed four-cycle counts (plain
//!   and restricted to a known mask) behind a name-keyed registry, and turns
//!   them into calibrated two-sided tests with Monte Carlo power.
//! * [`fourierweights`] evaluates the leading-order polynomial for conditional
//!   signed star weights and the Monte Carlo / quadrature estimates it is
//!   checked against.
//! * [`divergence`] computes exact and Monte Carlo total variation and
//!   chi-square divergences on tiny instances, including the signed-weight
//!   expansion of the chi-square divergence.
//! * [`sweep`] runs parameter grids and writes power surfaces; [`cli`] is the
//!   command-line front end.

pub mod error;
pub mod numerics;
pub mod rng;

pub mod gaussmodel;
pub mod signedstats;
pub mod fourierweights;
pub mod divergence;
pub mod sweep;

pub mod cli;

pub use error::{Error, Result};
