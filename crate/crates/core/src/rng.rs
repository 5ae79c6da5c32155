//! Named random substreams.
//!
//! Every stochastic component draws from its own ChaCha stream keyed by the
//! root seed, a purpose tag and the ids of the entity it belongs to. Adding a
//! UE or a flow never shifts the draws seen by any other entity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derive an independent generator for `(seed, tag, ids...)`.
pub fn substream(seed: u64, tag: &str, ids: &[u64]) -> SimRng {
    let mut key = splitmix64(seed ^ fnv1a(tag));
    for &id in ids {
        key = splitmix64(key ^ id.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    ChaCha8Rng::seed_from_u64(key)
}
