use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a path of stream tags
/// (recording index, tree index, fold index, ...).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(base, tags))
}
