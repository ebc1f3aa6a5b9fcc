//! Deterministic RNG streams. Every Monte Carlo replica draws from its own
//! ChaCha stream keyed by `(seed, index)`, so results do not depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` once per replica `0..count`, each with its own stream, in
/// parallel. Output order is replica order.
pub fn replicas<T: Send>(
    seed: u64,
    count: usize,
    f: impl Fn(&mut StreamRng) -> T + Sync,
) -> Vec<T> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| f(&mut stream(seed, i)))
        .collect()
}

/// Child seed for a named sub-task. FNV-1a over the label, mixed with the
/// parent seed through splitmix64; stable across platforms and releases.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
