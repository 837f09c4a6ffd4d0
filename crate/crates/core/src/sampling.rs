//! Seeded shot sampling.
//!
//! All randomness comes from ChaCha8 streams keyed by a master seed plus
//! integer counters, so outcomes are reproducible bit-for-bit across runs,
//! thread counts and platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; used to spread counters over the seed space.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for work item `stream` of evaluation `round` under `seed`.
pub fn stream_rng(seed: u64, round: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(round)));
    rng.set_stream(stream);
    rng
}

/// Draws `shots` outcomes from `probs` and returns the per-outcome counts.
///
/// Each shot inverts the cumulative distribution at one uniform variate.
pub fn sample_counts(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        counts[k] += 1;
    }
    counts
}
