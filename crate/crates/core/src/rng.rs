//! Seeded random streams.
//!
//! Every random consumer gets its own ChaCha stream derived from a seed and a
//! purpose tag, so the order in which replications or restarts are scheduled
//! never changes what they draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream tags used by the experiment driver.
pub mod purpose {
    pub const DEGREES: u64 = 1;
    pub const GRAPH: u64 = 2;
    pub const FLIP: u64 = 3;
    pub const CLUSTER: u64 = 4;
}

pub fn stream(seed: u64, purpose: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &w| mix64(acc ^ mix64(w)))
}
