//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] obtained
//! from a 64-bit master seed and a short path of integer indices, e.g.
//! `(cell index, trial index)`. The child seed is computed by folding each
//! path component into the master seed with the SplitMix64 finalizer:
//!
//! ```text
//! h0 = master
//! h_{i+1} = splitmix64(h_i ^ splitmix64(component_i + 0x9E3779B97F4A7C15 * (i + 1)))
//! ```
//!
//! and the stream is `ChaCha8Rng::seed_from_u64(h_k)`. Because a trial's stream
//! depends only on its path, results do not depend on how trials are scheduled
//! across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Well-known first path components, so unrelated consumers of one master
/// seed never collide.
pub mod tags {
    pub const NULL_CALIBRATION: u64 = 0x4E55_4C4C;
    pub const ALTERNATIVE: u64 = 0x414C_5431;
    pub const LATENT_BATCH: u64 = 0x4C41_5442;
    pub const OUTCOME_BATCH: u64 = 0x4F55_5442;
    pub const SCALING: u64 = 0x5343_414C;
    pub const STARS: u64 = 0x5354_4152;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the child seed for `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().enumerate().fold(master, |h, (i, &c)| {
        let salt = c.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1));
        splitmix64(h ^ splitmix64(salt))
    })
}

/// Stream for `path` under `master`.
pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
