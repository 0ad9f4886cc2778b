//! Deterministic derivation of independent RNG streams.
//!
//! Replicates, designs, and pipeline stages each get their own stream derived
//! from `(master seed, labeled components)`, so results do not depend on
//! worker count or scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The deterministic generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche behavior for seed mixing.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with an ordered list of stream components.
pub fn mix_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// FNV-1a over bytes; used to turn stable labels into stream components.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A seeded generator for the stream `(master, parts...)`.
pub fn stream_rng(master: u64, parts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(mix_seed(master, parts))
}

/// A seeded generator for a string-labeled stream.
pub fn labeled_rng(master: u64, label: &str, parts: &[u64]) -> SimRng {
    let mut all = alloc::vec::Vec::with_capacity(parts.len() + 1);
    all.push(fnv1a64(label.as_bytes()));
    all.extend_from_slice(parts);
    stream_rng(master, &all)
}
