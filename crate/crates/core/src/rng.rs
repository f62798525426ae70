//! Deterministic random streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 generator seeded
//! with a 64-bit value. Independent tasks (ensemble members, probes,
//! patterns) never share generator state: each gets its own seed through
//! [`derive_seed`] or its own ChaCha stream id through [`stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for member `index` of a family rooted at `base`.
///
/// Distinct `(base, index)` pairs give statistically unrelated seeds, so
/// members can be generated in any order or in parallel.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index.wrapping_mul(0xD605_BBB5_8C8A_BBB5))
}

/// Generator for `seed`, positioned on ChaCha stream `stream_id`.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
