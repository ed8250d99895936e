// SPDX-License-Identifier: MIT OR Apache-2.0

//! Random streams. Every draw comes from a ChaCha8 generator keyed by a 64-bit
//! seed; independent replications use seeds derived from a master seed and
//! their coordinates, so they can run in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for replication `rep` of configuration `config` under `master`.
pub fn derive_seed(master: u64, config: u64, rep: u64) -> u64 {
    let mut h = splitmix(master ^ 0x6a09_e667_f3bc_c908);
    h = splitmix(h ^ config);
    splitmix(h ^ rep.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
