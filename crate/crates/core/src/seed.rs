//! Seed derivation. Every stochastic stage draws from its own stream,
//! keyed by a tag, so adding a stage never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `tag` under `parent`. Stable across platforms and releases.
pub fn derive(parent: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then mixed with the parent
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(parent ^ splitmix64(h))
}

pub fn derive_indexed(parent: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive(parent, tag) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(parent: u64, tag: &str) -> StageRng {
    rng(derive(parent, tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_separate_streams() {
        assert_ne!(derive(7, "split"), derive(7, "vae-init"));
        assert_ne!(derive(7, "split"), derive(8, "split"));
        assert_eq!(derive(7, "split"), derive(7, "split"));
        assert_ne!(derive_indexed(7, "repeat", 0), derive_indexed(7, "repeat", 1));
    }
}
