//! Seed derivation. Every random choice in the crate flows through one
//! user-visible seed; sub-streams are derived by salting it, so runs are
//! reproducible bit-for-bit regardless of call order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent generator from a root seed and a salt path
/// (e.g. `[trial, attempt]`).
pub(crate) fn derive_rng(seed: u64, salts: &[u64]) -> ChaCha8Rng {
    let mut s = splitmix64(seed);
    for &salt in salts {
        s = splitmix64(s ^ splitmix64(salt));
    }
    ChaCha8Rng::seed_from_u64(s)
}
