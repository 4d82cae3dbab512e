//! Stable per-cell seeds derived from one master seed.

use std::hash::Hasher;

use fnv::FnvHasher;

/// SplitMix64 finalizer: spreads nearby inputs across the whole range.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the item named by `parts` under `master`. Identical inputs give
/// identical seeds on every platform and toolchain.
pub fn derive(master: u64, parts: &[&str]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&master.to_le_bytes());
    for p in parts {
        h.write(&(p.len() as u64).to_le_bytes());
        h.write(p.as_bytes());
    }
    mix(h.finish())
}

/// Seed for the `index`-th item under `seed`.
pub fn child(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index))
}
