//! Deterministic, splittable random-number streams.
//!
//! Every stochastic step in the crate draws from a stream derived from a
//! master seed, a short purpose tag and a list of indices (circuit index,
//! repetition index, shot-block index, ...). Streams derived from distinct
//! keys are independent, and the derivation is order-free: the same key
//! yields the same stream no matter which thread asks first. That is what
//! makes the experiment harness reproducible under `rayon` parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent RNG stream from `(master, tag, indices)`.
///
/// The key material is hashed, so tags of different lengths and index lists
/// of different shapes can never collide by concatenation accidents.
pub fn derive_rng(master: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update((indices.len() as u64).to_le_bytes());
    for idx in indices {
        hasher.update(idx.to_le_bytes());
    }
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Derives a plain `u64` sub-seed; convenient when an API takes a seed
/// rather than an RNG (e.g. the shot sampler, which does its own block
/// splitting internally).
pub fn derive_seed(master: u64, tag: &str, indices: &[u64]) -> u64 {
    use rand_chacha::rand_core::RngCore;
    derive_rng(master, tag, indices).next_u64()
}
