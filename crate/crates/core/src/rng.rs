//! Deterministic randomness.
//!
//! Pairwise compatibility uses a stateless counter-based hash so that a pair
//! of agents gets the same draw no matter when or how often it is queried.
//! Sequential draws (arrivals, clocks, tie-breaking) come from independent
//! ChaCha streams derived from one seed, which keeps them aligned across
//! policies for common-random-number comparisons.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` for the unordered pair `{a, b}` under `seed`.
#[inline]
pub fn pair_uniform(a: u64, b: u64, seed: u64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    h = mix64(h ^ lo);
    h = mix64(h ^ hi.wrapping_mul(GOLDEN));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Named sub-streams of a simulation seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Arrivals = 1,
    Clocks = 2,
    Policy = 3,
    Identities = 4,
    Compat = 5,
}

/// Independent generator for one named stream of `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed for the compatibility hash, derived from the simulation seed.
pub fn compat_seed(seed: u64) -> u64 {
    mix64(seed ^ mix64(Stream::Compat as u64))
}
