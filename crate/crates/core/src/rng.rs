use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator shared by every stochastic step. ChaCha keeps streams
/// stable across platforms and crate upgrades.
pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent sub-seed for a named role (splitmix64 finalizer).
pub(crate) fn derive(seed: u64, role: u64) -> u64 {
    let mut z = seed ^ role.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
