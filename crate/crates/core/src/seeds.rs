//! Deterministic seed derivation.
//!
//! Every random draw in a run is keyed by a path of integer tags hashed
//! together with the master seed, so trials can run in any order (or in
//! parallel) and still see the same streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed type used throughout the crate.
pub type Seed = u64;

const NOISE_TAG: u64 = 0x6e_6f69_7365;
const SENSING_TAG: u64 = 0x73_656e_7365;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash a master seed and a path of tags into a sub-seed.
pub fn derive(master: Seed, tags: &[u64]) -> Seed {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Generator for a given seed.
pub fn rng(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-trial sub-seeds.
///
/// The noise seed depends only on the trial index and the sample count, so
/// the same noise realization is reused across compression levels. The
/// sensing seed additionally depends on `M` unless sensing is frozen, in
/// which case it depends on `M` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub noise: Seed,
    pub sensing: Seed,
}

impl TrialSeeds {
    pub fn new(master: Seed, n_samples: usize, n_filters: usize, trial: usize, freeze_sensing: bool) -> Self {
        let noise = derive(master, &[NOISE_TAG, n_samples as u64, trial as u64]);
        let sensing = if freeze_sensing {
            derive(master, &[SENSING_TAG, n_samples as u64, n_filters as u64])
        } else {
            derive(master, &[SENSING_TAG, n_samples as u64, n_filters as u64, trial as u64])
        };
        TrialSeeds { noise, sensing }
    }
}
