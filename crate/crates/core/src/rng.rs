//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream derived from
//! `(base_seed, run_index, purpose)`. ChaCha is counter based, so two streams
//! with different stream ids never overlap and parallel runs stay reproducible
//! regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Derive the generator for one `(base_seed, run_index, purpose)` triple.
pub fn substream(base_seed: u64, run_index: u64, purpose: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream_id(run_index, purpose));
    rng
}

fn stream_id(run_index: u64, purpose: &str) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finalizer over the combination.
    let mut tag: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in purpose.bytes() {
        tag ^= u64::from(byte);
        tag = tag.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = tag ^ run_index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inverse-CDF draw from a probability vector given a uniform `u` in [0, 1).
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the last partial sum: take the last index with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
