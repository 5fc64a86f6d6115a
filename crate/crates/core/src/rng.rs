//! Counter-based seed derivation.
//!
//! Every random object (a sketch operator, a Wishart trial, a bootstrap
//! resample) gets its own ChaCha stream keyed by a 64-bit seed that is derived
//! from a master seed and an object counter. Trials can therefore be executed
//! in any order, on any number of threads, and still produce identical values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the `counter`-th object under `master`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(master) ^ counter.wrapping_mul(GOLDEN))
}

/// Seed for an object addressed by several counters, e.g. (kind, k, replicate).
pub fn derive_seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &c| derive_seed(acc, c))
}

/// Generator for sub-stream `stream` of the object seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
