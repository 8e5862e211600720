//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. Parallel loops derive
//! one independent stream per task from a parent seed and the task's index
//! path, so results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with an index path into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

pub fn from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for the task identified by `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
