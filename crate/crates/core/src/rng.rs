//! Seed derivation. Every random stream is a pure function of a master
//! seed and a stream index, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x6A09_E667_F3BC_C909)))
}

pub fn stream(master: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, index))
}

/// Reserved stream indices for non-replicate randomness.
pub mod streams {
    pub const SUBSAMPLE: u64 = u64::MAX;
    pub const CHI_BAR: u64 = u64::MAX - 1;
    pub const NULL_BAND: u64 = u64::MAX - 2;
    pub const SIMULATE: u64 = u64::MAX - 3;
}
