//! Seeded shuffles shared by every sampling step.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for an independent stream keyed by `(seed, key)`.
///
/// Streams for different keys never influence each other, so adding a new key
/// leaves the draws of existing keys unchanged.
pub fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(key.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn shuffle<T>(items: &mut [T], seed: u64) {
    items.shuffle(&mut rng(seed));
}

/// Uniform sample of `n` items without replacement, in shuffled order.
/// Callers check `n <= items.len()`.
pub fn sample<T>(mut items: Vec<T>, n: usize, seed: u64) -> Vec<T> {
    debug_assert!(n <= items.len());
    shuffle(&mut items, seed);
    items.truncate(n);
    items
}
