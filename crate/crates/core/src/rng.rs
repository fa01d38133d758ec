//! Counter-based seeding for reproducible parallel Monte Carlo.
//!
//! Every sample gets its own ChaCha stream keyed by `(seed, index)`, so a
//! worker pool of any size drawing samples in any order produces the same
//! values as a sequential run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step, used to decorrelate `(seed, index)` pairs.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a per-stream seed from an experiment seed and a stream index.
#[inline]
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut s = seed ^ index.wrapping_mul(0xa02b_dbf7_bb3c_0a7b);
    splitmix64(&mut s)
}

/// RNG for stream `index` of experiment `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut s = stream_seed(seed, index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
