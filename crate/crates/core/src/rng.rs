//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose seed is
//! derived from a master seed and a path of integer keys (cell index, trial
//! index, purpose tag, ...). Streams therefore do not depend on execution
//! order or on how many threads run a sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a key path.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream(master: u64, keys: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, keys))
}

pub fn gaussian_vec(rng: &mut Stream, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Purpose tags so that distinct draws from one seed never share a stream.
pub mod tag {
    pub const FRAME: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const MEASUREMENT: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const POWER: u64 = 5;
    pub const SUPPORT: u64 = 6;
    pub const PAIRS: u64 = 7;
}
