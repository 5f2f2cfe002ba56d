//! Seed derivation for independent random streams.
//!
//! A child seed is `derive(base, label, indices)`: FNV-1a over the little-endian
//! bytes of `base`, the UTF-8 bytes of `label` and each index as a little-endian
//! `u64`, finished with the SplitMix64 mixer. Streams are ChaCha8 generators
//! seeded with the child seed through `SeedableRng::seed_from_u64`, so external
//! tools can reproduce any stream from the base seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(base: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = fnv(FNV_OFFSET, &base.to_le_bytes());
    h = fnv(h, label.as_bytes());
    for i in indices {
        h = fnv(h, &i.to_le_bytes());
    }
    splitmix64(h)
}

pub fn stream(base: u64, label: &str, indices: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive(base, label, indices))
}
