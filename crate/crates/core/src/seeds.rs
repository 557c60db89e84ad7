//! Seed derivation.
//!
//! Every random stream in the crate is keyed by a tuple of integers
//! (master seed, training size, block index, replication, ...) mixed through
//! SplitMix64, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags that keep derived seeds for different purposes apart.
pub mod tag {
    pub const PERMUTATION: u64 = 0x5045_524d;
    pub const BLOCK: u64 = 0x424c_4f43;
    pub const TUNING: u64 = 0x5455_4e45;
    pub const REPLICATION: u64 = 0x5245_504c;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const TREE: u64 = 0x5452_4545;
    pub const ORACLE: u64 = 0x4f52_4143;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with each element of `parts` in order.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
