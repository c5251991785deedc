use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent seed from a master seed and a textual stream tag.
///
/// Every randomized stage (dataset generation, weight init, shuffling,
/// per-tree bootstraps) draws from its own stream so that adding, removing,
/// or reordering stages never perturbs the others. FNV-1a over the tag mixed
/// with the master seed, finished with a splitmix64 avalanche.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ master.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The deterministic RNG used everywhere in this crate.
pub type Rng = ChaCha8Rng;

/// Builds the stream RNG for a (master seed, tag) pair.
pub fn stream_rng(master: u64, tag: &str) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag))
}

/// Builds an RNG directly from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
