//! Deterministic derivation of independent random streams from a root seed.
//!
//! Every experiment cell gets its own stream, keyed by a tuple of labels
//! (task, policy, seed index, ...). The key is hashed with FNV-1a and
//! finalized with SplitMix64 so the mapping is stable across platforms and
//! compiler versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used throughout the crate.
pub type SimRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// One component of a stream key.
#[derive(Debug, Clone, Copy)]
pub enum KeyPart<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for KeyPart<'a> {
    fn from(s: &'a str) -> Self {
        KeyPart::Str(s)
    }
}

impl<'a> From<&'a String> for KeyPart<'a> {
    fn from(s: &'a String) -> Self {
        KeyPart::Str(s.as_str())
    }
}

impl From<u64> for KeyPart<'_> {
    fn from(v: u64) -> Self {
        KeyPart::Int(v)
    }
}

impl From<usize> for KeyPart<'_> {
    fn from(v: usize) -> Self {
        KeyPart::Int(v as u64)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derives a child seed from `root` and a key. Distinct keys give
/// unrelated seeds; the same key always gives the same seed.
pub fn derive_seed(root: u64, parts: &[KeyPart<'_>]) -> u64 {
    let mut h = fnv_bytes(FNV_OFFSET, &root.to_le_bytes());
    for part in parts {
        // tag + length prefix so ("ab","c") and ("a","bc") differ
        match part {
            KeyPart::Str(s) => {
                h = fnv_bytes(h, &[0x01]);
                h = fnv_bytes(h, &(s.len() as u64).to_le_bytes());
                h = fnv_bytes(h, s.as_bytes());
            }
            KeyPart::Int(v) => {
                h = fnv_bytes(h, &[0x02]);
                h = fnv_bytes(h, &v.to_le_bytes());
            }
        }
    }
    splitmix64(h)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(root, parts))`.
pub fn derive_rng(root: u64, parts: &[KeyPart<'_>]) -> SimRng {
    rng_from_seed(derive_seed(root, parts))
}
