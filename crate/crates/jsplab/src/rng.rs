//! Seeding and sub-stream derivation.
//!
//! Every randomized routine in this crate is driven by a [`ChaCha8Rng`]
//! seeded from an explicit `u64`. Batch runners (trial loops, sample
//! batches) derive one independent seed per work item with [`derive_seed`],
//! so results are identical whether items run sequentially or on a thread
//! pool, and replaying a master seed reproduces every artifact bit for bit.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Builds the crate-standard RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed for sub-stream `index` of a master seed.
///
/// SplitMix64 finalizer over `master ⊕ (index+1)·φ64`; the `+1` keeps
/// sub-stream 0 distinct from the master stream itself.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// SplitMix64 finalizer; also the accumulator step for [`stable_hash`].
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit content hash, stable across platforms and builds.
///
/// Used to key derived artifacts (optimal-set sidecars) to instance content;
/// not a cryptographic hash.
pub fn stable_hash(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut acc = 0x243F_6A88_85A3_08D3; // π fraction, arbitrary non-zero start
    for w in words {
        acc = splitmix64(acc ^ w);
    }
    acc
}
