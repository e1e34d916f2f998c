//! Seeding scheme.
//!
//! All randomness flows from ChaCha8 (`rand_chacha` 0.9) seeded through
//! `seed_from_u64`; Gaussian draws use the ziggurat sampler of
//! `rand_distr` 0.5 (`StandardNormal`). Derived seeds go through the
//! SplitMix64 finalizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type LdRng = ChaCha8Rng;

/// SplitMix64 output function applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> LdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of `seed` (used for split seeds, restarts, shards).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Per-(grid point, trial) seed: `splitmix64(master ^ (point * 10^6 + trial))`.
pub fn trial_seed(master: u64, point_index: u64, trial_index: u64) -> u64 {
    splitmix64(master ^ point_index.wrapping_mul(1_000_000).wrapping_add(trial_index))
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
