//! Deterministic seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator whose seed is derived
//! from the run seed plus a small tuple of indices, so results do not depend
//! on the order in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes `parts` into `seed`. Order matters; distinct tuples give unrelated seeds.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Stream tags, kept distinct so that e.g. encoder init never aliases batch shuffling.
pub mod tag {
    pub const FOLDS: u64 = 1;
    pub const ENCODER: u64 = 2;
    pub const PREDICTOR: u64 = 3;
    pub const HEAD: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const AUGMENT: u64 = 6;
    pub const PRETRAIN_SHUFFLE: u64 = 7;
}
