//! Seeded randomness with stable streams.
//!
//! All random behavior in the crate flows through ChaCha8 generators
//! created here, so a (seed, stream) pair fully determines a run. Streams
//! let one experiment seed drive independent components (conformance
//! testing, standalone test derivation) without their draws interleaving.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

pub type Prng = rand_chacha::ChaCha8Rng;

/// Mixes a seed and a stream id into an independent generator seed.
fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The generator for a given seed and component stream.
pub fn stream(seed: u64, stream_id: u64) -> Prng {
    Prng::seed_from_u64(mix(seed ^ mix(stream_id)))
}

/// Uniform draw from `0..n`; `n` must be positive.
pub fn uniform_index(rng: &mut Prng, n: usize) -> usize {
    rng.random_range(0..n)
}

/// Geometric length with the given mean: the count of successes at
/// probability mean/(1+mean) each before the first failure, so length k
/// has probability (1/(1+mean)) * (mean/(1+mean))^k.
pub fn geometric_len(rng: &mut Prng, mean: f64) -> usize {
    let stop = 1.0 / (1.0 + mean);
    let mut k = 0usize;
    while rng.random::<f64>() >= stop {
        k += 1;
    }
    k
}
