//! Seed derivation.
//!
//! Every random stream in the crate is addressed by `(seed, index)` rather
//! than by position in a shared generator, so that draws can be produced in
//! any order, by any number of workers, with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer applied to `seed + (index + 1)·γ`.
///
/// This is the stated mixing function for sub-seeds: the `i`-th draw of a
/// stream seeded with `seed` uses `mix64(seed, i)`.
pub fn mix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of item `index` in the sub-stream `tag` of `seed`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed, tag), index)
}

/// Generator for the `index`-th draw of stream `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed, index))
}

// Stream tags. Distinct tags keep batches that must be independent apart.
pub(crate) const TAG_REPLICATE: u64 = 1;
pub(crate) const TAG_RADEMACHER: u64 = 2;
pub(crate) const TAG_EXPECTATION: u64 = 3;
pub(crate) const TAG_DOUBLE_SAMPLE: u64 = 4;
pub(crate) const TAG_LOG_SHATTER: u64 = 5;
pub(crate) const TAG_POPULATION_RADEMACHER: u64 = 6;
