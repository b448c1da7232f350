//! Seed derivation for reproducible Monte-Carlo runs.
//!
//! Every random object is driven by a ChaCha8 stream keyed from a 64-bit
//! seed. Trial `t` of a run with master seed `s` uses
//! `trial_seed(s, t) = mix64(s ^ mix64(t.wrapping_add(TRIAL_TAG)))`, so a
//! trial's stream depends only on `(s, t)` and never on how many trials the
//! run has. Components inside one trial (the band matrix, its Ginibre
//! partner, ...) take further `substream` derivations of the trial seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const TRIAL_TAG: u64 = 0x7472_6961_6c5f_7365; // "trial_se"

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(master ^ mix64(trial.wrapping_add(TRIAL_TAG)))
}

/// Independent seed for a named component of one trial.
pub fn substream(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ tag.rotate_left(17) ^ 0xA5A5_5A5A_C3C3_3C3C)
}

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
