//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by
//! [`derive_seed`], which folds a master seed and a path of stream indices
//! through SplitMix64. A path is `(stream, index, index, ...)`; the stream
//! constants below name the consumer. Two different paths give independent
//! generators, and the same path always gives the same generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Graph generators; indexed by population.
pub const STREAM_GRAPH: u64 = 1;
/// Intrinsic frequencies.
pub const STREAM_OMEGA: u64 = 2;
/// Ensemble initial phases; indexed by (cell, member).
pub const STREAM_ENSEMBLE: u64 = 3;
/// Design-of-experiments; indexed by iteration.
pub const STREAM_DOE: u64 = 4;
/// Permutation importance; indexed by (feature, repeat).
pub const STREAM_PERMUTATION: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &idx| splitmix64(acc ^ splitmix64(idx)))
}

pub fn rng_for(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}
