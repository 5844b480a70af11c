// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Counter-based seeding: every shot draws from its own generator, keyed by
//! `(seed, stream, index)`, so results do not depend on evaluation order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type ShotRng = Xoshiro256PlusPlus;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a sequence of words into a single 64-bit key.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Generator for item `index` of substream `stream` under `seed`.
pub fn shot_rng(seed: u64, stream: u64, index: u64) -> ShotRng {
    ShotRng::seed_from_u64(mix(&[seed, stream, index]))
}
