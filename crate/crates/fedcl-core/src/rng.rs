//! Seeded RNG streams.
//!
//! Every source of randomness in the simulator is a [`ChaCha8Rng`] derived
//! from the run seed plus a fixed list of tags (purpose, device id, round).
//! Two runs with the same seed therefore draw identical streams regardless of
//! execution order, which is what makes parallel device execution bit-equal
//! to the sequential reference semantics.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Distinct constants keep unrelated streams decorrelated.
pub mod tag {
    pub const INIT: u64 = 0x01;
    pub const SELECT: u64 = 0x02;
    pub const DEVICE_ROUND: u64 = 0x03;
    pub const UPLOAD: u64 = 0x04;
    pub const REMOTE_SHUFFLE: u64 = 0x05;
    pub const SYNTHETIC: u64 = 0x06;
    pub const PARTITION: u64 = 0x07;
    pub const SPLIT: u64 = 0x08;
    pub const LABELS: u64 = 0x09;
    pub const FINETUNE_HEAD: u64 = 0x0a;
    pub const FINETUNE_EPOCH: u64 = 0x0b;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with a list of tags into a single stream seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &t in tags {
        state = splitmix64(state ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    state
}

/// A deterministic RNG stream for `(base seed, tags)`.
pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
