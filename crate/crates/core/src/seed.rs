//! Expansion of one top-level seed into independent per-purpose seeds.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a seed for `purpose` (e.g. "init", "batching", "folds") from `seed`.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    let tag = purpose
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME));
    splitmix64(seed ^ splitmix64(tag))
}

/// Derives a seed for the `index`-th member of a family (folds, repeats).
pub fn derive_indexed_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, purpose).wrapping_add(index))
}
