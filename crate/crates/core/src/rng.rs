//! Seeded randomness.
//!
//! Every stochastic routine in the crate draws from [`ChaCha8Rng`], a portable
//! generator whose output stream is fixed by its algorithm, so fixtures and
//! checkpoints reproduce bit-for-bit across platforms.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Generator seeded from a 64-bit integer.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed for sub-stream `stream` of `base`
/// (splitmix64 finalizer over the pair).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
