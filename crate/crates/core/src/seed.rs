//! Stable seed derivation.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` whose seed is a
//! pure function of user-supplied seeds and record identifiers, so results do
//! not depend on iteration or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Used instead of `DefaultHasher`, whose output may change
/// between compiler releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// `global ⊕ hash(id)`.
pub fn keyed(global: u64, id: &str) -> u64 {
    global ^ fnv1a64(id.as_bytes())
}

/// Seeded generator on an explicit ChaCha stream. Distinct streams of the same
/// seed are independent sequences.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
