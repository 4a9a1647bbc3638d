//! Deterministic RNG derivation.
//!
//! Every stochastic routine in this crate owns an explicit generator seeded
//! through a stable hash of (master seed, domain, index/key). SHA-256 is used
//! because the standard library hasher is not stable across releases; the
//! derivation must never change silently, or seeded runs stop being
//! replayable.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent stream for (`master_seed`, `domain`, `index`).
pub fn derive_rng(master_seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(domain.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Derives an independent stream for a string key (impression ids, grid-cell
/// descriptors).
pub fn derive_rng_keyed(master_seed: u64, domain: &str, key: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([1u8]);
    hasher.update(domain.as_bytes());
    hasher.update([0u8]);
    hasher.update(key.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Unbiased index in `0..bound` by rejection sampling.
pub(crate) fn uniform_index(bound: usize, rng: &mut (impl RngCore + ?Sized)) -> usize {
    assert!(bound > 0);
    let bound = bound as u64;
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let draw = rng.next_u64();
        if draw < zone {
            return (draw % bound) as usize;
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub(crate) fn shuffle_in_place<T>(items: &mut [T], rng: &mut (impl RngCore + ?Sized)) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(i + 1, rng);
        items.swap(i, j);
    }
}
