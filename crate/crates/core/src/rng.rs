//! Deterministic stream derivation.
//!
//! Every random decision in this crate draws from a [`Stream`] derived from a
//! master seed plus a tuple of indices (generation, individual, level,
//! placement, ...). Derivation is a SplitMix64 sponge over the parts, so the
//! mapping is injective for all practical purposes and independent of
//! evaluation order or parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG handed to all consumers.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a sequence of parts into a single 64-bit key.
pub fn mix(parts: &[u64]) -> u64 {
    let mut state = splitmix(GOLDEN ^ parts.len() as u64);
    for &p in parts {
        state = splitmix(state.wrapping_add(GOLDEN).wrapping_add(p));
    }
    state
}

/// Derive an independent RNG stream from a key tuple.
pub fn stream(parts: &[u64]) -> Stream {
    let k = mix(parts);
    let mut seed = [0u8; 32];
    let mut s = k;
    for chunk in seed.chunks_mut(8) {
        s = splitmix(s.wrapping_add(GOLDEN));
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Convenience: derive a child key from a parent key and an index.
pub fn derive(parent: u64, index: u64) -> u64 {
    mix(&[parent, index])
}
