//! Seed derivation for independent random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used everywhere a seeded stream is needed.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of substream `index` from a master seed:
/// `splitmix64(seed ^ splitmix64(index))`.
///
/// Substream `i` depends only on `(seed, i)`, so adding trees, chunks or
/// repeats never reshuffles the earlier ones.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Seeded stream for substream `index`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(mix(seed, index))
}
