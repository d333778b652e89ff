//! Seed fan-out. Every random decision in the crate draws from a generator
//! derived from one base seed plus a path of tags, so independent tasks get
//! independent, order-free streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Top-level stream names.
pub const STREAM_ESTIMATOR: u64 = 0xE5;
pub const STREAM_POLICY: u64 = 0x90;
pub const STREAM_GENERATOR: u64 = 0x6E;

/// Sub-tags within the estimator stream.
pub const TAG_SEARCH: u64 = 0x5E;
pub const TAG_MONITOR: u64 = 0x30;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a tag path.
pub fn mix(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag));
    }
    state
}

/// A generator for the sub-stream addressed by `tags`.
pub fn rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base, tags))
}
