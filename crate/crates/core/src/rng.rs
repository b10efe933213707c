//! Seed derivation. Every random stream is a ChaCha8 generator seeded from a
//! base seed and a list of stream labels, so results do not depend on the order
//! or thread in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named streams.
pub mod stream {
    pub const IID: u64 = 1;
    pub const ASYMPTOTIC: u64 = 2;
    pub const VALIDATION: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
    pub const CANDIDATES: u64 = 5;
    pub const TARGET: u64 = 6;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(base), |acc, &l| splitmix(acc ^ splitmix(l)))
}

pub fn stream_rng(base: u64, labels: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, labels))
}
