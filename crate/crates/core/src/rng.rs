//! Portable seeded random streams.
//!
//! Every planner run owns a handful of independent ChaCha8 streams derived
//! from one 64-bit seed. ChaCha is counter based and its output is fully
//! specified, so a given `(seed, stream)` pair yields the same sequence on
//! every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere a planner draws randomness.
pub type PlannerRng = ChaCha8Rng;

/// Stream used for global (uniform / informed) sampling.
pub const STREAM_GLOBAL: u64 = 0;
/// Stream used for bandit arm selection.
pub const STREAM_ARM_SELECTION: u64 = 1;
/// First stream reserved for per-arm walkers; arm `i` uses `STREAM_WALKER_BASE + i`.
pub const STREAM_WALKER_BASE: u64 = 1 << 16;

/// Open sub-stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> PlannerRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer. Used to derive well-spread seeds from structured keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a sequence of words into one seed.
pub fn combine(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &w| mix64(acc ^ mix64(w)))
}

/// FNV-1a over bytes, for hashing names into seeds.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
