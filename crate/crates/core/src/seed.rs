// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seed derivation.
//!
//! Every random stream in the crate is keyed by `(seed, stage, index)`. The
//! triple is mixed through SplitMix64 so that neighbouring seeds and
//! replication indices produce unrelated ChaCha streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pipeline stage tags mixed into derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Simulate = 1,
    Permute = 2,
    BallSeeding = 3,
    Decode = 4,
    Replicate = 5,
    KMeansRestart = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, stage, index)`.
pub fn derive(seed: u64, stage: Stage, index: u64) -> u64 {
    let a = splitmix64(seed);
    let b = splitmix64(a ^ (stage as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(seed: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    rng(derive(seed, stage, index))
}
