//! Seeded randomness.
//!
//! All randomness in the crate flows from ChaCha8 (`rand_chacha` 0.3) seeded
//! through `rand_core`'s `seed_from_u64`. Uniform doubles are formed from the
//! top 53 bits of `next_u64`, so a seed produces the same stream on every
//! platform and thread count. Independent substreams for different purposes
//! (deployment, state sampling, route sampling) are derived with [`derive`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a substream seed from a parent seed, a purpose tag and an index.
pub fn derive(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = mix64(seed);
    for b in tag.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    mix64(h ^ index)
}

/// Uniform double in `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Samples an index from a discrete distribution. `probs` need not be exactly
/// normalized; the last positive entry absorbs rounding.
pub fn categorical(rng: &mut impl RngCore, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let u = uniform(rng) * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}
