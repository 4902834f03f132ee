//! Deterministic seed derivation for named randomness sub-streams, so a
//! single run seed fans out stably across maps, landmarks, and trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The project-wide deterministic generator for `seed`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a hash of `parts` mixed with `base`. Stable across platforms and
/// releases, unlike the std hasher.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for byte in base.to_le_bytes() {
        h = (h ^ byte as u64).wrapping_mul(PRIME);
    }
    for part in parts {
        for byte in part.as_bytes() {
            h = (h ^ *byte as u64).wrapping_mul(PRIME);
        }
        // separator so ("ab","c") differs from ("a","bc")
        h = (h ^ 0xff).wrapping_mul(PRIME);
    }
    h
}
