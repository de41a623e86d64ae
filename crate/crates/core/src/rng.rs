//! Deterministic random streams.
//!
//! Every stochastic piece of work gets its own ChaCha8 generator seeded from
//! `(master seed, purpose tag, indices)`, so results never depend on how work
//! is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags that keep streams for different roles disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Network = 1,
    Outcome = 2,
    Sample = 3,
    Tree = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of words into a 64-bit stream seed.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(master), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn stream(master: u64, purpose: Purpose, indices: &[u64]) -> StreamRng {
    let mut words = Vec::with_capacity(indices.len() + 1);
    words.push(purpose as u64);
    words.extend_from_slice(indices);
    ChaCha8Rng::seed_from_u64(derive_seed(master, &words))
}
