//! Deterministic seed derivation for experiments.
//!
//! One master seed fans out into independent streams through a splitmix64
//! chain. Two stream families exist:
//!
//! * the *instance* stream, keyed by `(master, trial)` — spike positions and
//!   amplitudes, deliberately independent of the grid refinement and the
//!   noise level so the same physical instance is measured across a sweep;
//! * the *noise* stream, keyed by `(master, trial, F index, SNR index)` —
//!   each measurement cell gets fresh noise.
//!
//! The derived values seed counter-based ChaCha generators, so streams are
//! reproducible across platforms and rust versions.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const INSTANCE_TAG: u64 = 0x696e_7374; // "inst"
const NOISE_TAG: u64 = 0x6e6f_6973; // "nois"

/// splitmix64 finalizer: a cheap, well-mixed 64-bit permutation.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a master seed and a sequence of stream coordinates into one seed.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &p in parts {
        state = splitmix64(state ^ splitmix64(p));
    }
    state
}

/// Seed for the per-trial instance stream (positions and amplitudes).
pub fn instance_seed(master: u64, trial: u64) -> u64 {
    derive(master, &[INSTANCE_TAG, trial])
}

/// Seed for the per-cell noise stream.
pub fn noise_seed(master: u64, trial: u64, f_idx: u64, snr_idx: u64) -> u64 {
    derive(master, &[NOISE_TAG, trial, f_idx, snr_idx])
}

/// The project-standard generator for a derived seed.
pub fn rng_from(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
