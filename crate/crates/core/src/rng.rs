//! Counter-based splittable random streams.
//!
//! Every consumer of randomness derives an independent stream from a root
//! seed and a path of integer labels (trial index, purpose tag, ...). The
//! derivation is a pure hash, so results never depend on scheduling order
//! and any sub-experiment can be regenerated in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche behaviour for seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a root seed with a path of labels into a single stream key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(seed ^ 0x5bf0_3635_dead_beef);
    for &label in path {
        state = splitmix64(state ^ splitmix64(label.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    }
    state
}

/// Independent ChaCha stream for `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let key = derive_key(seed, path);
    let mut material = [0u8; 32];
    let mut s = key;
    for chunk in material.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(material)
}

/// Purpose tags keep unrelated streams apart even for equal trial indices.
pub mod tag {
    pub const INPUTS: u64 = 0x01;
    pub const NOISE: u64 = 0x02;
    pub const WEIGHTS: u64 = 0x03;
    pub const PROBES: u64 = 0x04;
    pub const TRIAL: u64 = 0x05;
    pub const NET: u64 = 0x06;
    pub const STARTS: u64 = 0x07;
    pub const FRESH: u64 = 0x08;
    pub const TARGETS: u64 = 0x09;
}
