//! Deterministic seed derivation.
//!
//! Every randomized computation takes one base seed and derives per-item
//! generators from `(seed, stream indices)`. Results are therefore identical
//! under any parallel schedule: item `i` sees the same generator whether it
//! runs first, last, or on another thread.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 output function.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of stream indices into one 64-bit seed.
pub fn mix(seed: u64, streams: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &s in streams {
        acc = splitmix64(acc ^ splitmix64(s));
    }
    acc
}

/// Derives a generator for the given stream of a base seed.
pub fn derive_rng(seed: u64, streams: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, streams))
}

/// FNV-1a digest of a byte string, as fixed-width hex. Used for config and
/// function digests embedded in reports and witnesses.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{hash:016x}")
}

/// Digest of an `f64` slice via its bit patterns.
pub fn digest_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fnv1a_hex(&bytes)
}
