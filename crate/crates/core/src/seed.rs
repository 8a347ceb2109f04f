//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a base seed plus a path of
//! counters (replicate index, fixture index, stream tag, ...). A stream's
//! seed depends only on that key, never on the order in which streams are
//! created, so work can be split across threads and still reproduce the
//! single-threaded output bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all simulation streams.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and a path of counters.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    let mut h = mix64(base.wrapping_add(GOLDEN));
    for (depth, &step) in path.iter().enumerate() {
        // Depth is folded in so that [a, b] and [b, a] land on different seeds.
        h = mix64(h ^ mix64(step.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 2))));
    }
    h
}

/// A generator for the stream identified by `base` and `path`.
pub fn stream(base: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive(base, path))
}

/// Stream tags, so that unrelated consumers of the same counters never
/// share a stream.
pub mod tag {
    pub const SCHEDULE: u64 = 0x5C4E;
    pub const REPLICATE: u64 = 0x5E91;
    pub const TIE_BREAK: u64 = 0x71E5;
    pub const OUTCOME: u64 = 0x0C0E;
    pub const TACTIC: u64 = 0x7AC7;
    pub const MATCH: u64 = 0x3A7C;
    pub const TRAIN: u64 = 0x7A1A;
    pub const WORLD: u64 = 0x3071;
    pub const INNER: u64 = 0x1AA3;
}
