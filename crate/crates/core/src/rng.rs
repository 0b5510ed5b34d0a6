//! Seed plumbing. Every stochastic routine takes an explicit RNG or seed;
//! sub-seeds are derived by hashing a parent seed with a stream tag so that
//! independent tasks never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an ordered list of stream tags.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(parent), |acc, &t| mix(acc ^ mix(t)))
}

/// Stable 64-bit tag for a string (FNV-1a), used to key seeds by dataset or
/// method name independently of iteration order.
pub fn tag(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
