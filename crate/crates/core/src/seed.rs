//! Deterministic seed splitting.
//!
//! Every random stream in the crate is derived from one 64-bit master seed and
//! a path of integer tags (subset, voter, role, ...), so parallel workers can
//! draw independently while the overall output stays reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master`; distinct tag paths give unrelated seeds.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x51_7CC1_B727_220A))))
}

pub fn rng(master: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(master, tags))
}

/// Role tags used when splitting per-voter streams.
pub mod role {
    pub const TYPE: u64 = 1;
    pub const OBSERVED: u64 = 2;
    pub const BELIEF: u64 = 3;
    pub const TIES: u64 = 4;
    pub const TRUTH: u64 = 5;
    pub const REPORT: u64 = 6;
}
