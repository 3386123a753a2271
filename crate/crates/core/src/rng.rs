//! Seeded random streams.
//!
//! Every random decision in the crate draws from a [`ChaCha8Rng`], which
//! produces the same stream on every platform. Independent jobs get their own
//! stream through [`derive_seed`]: the seed for a job is obtained by folding
//! the job's coordinates (for example `[n, alpha_index, instance, graph]`)
//! into the root seed with the SplitMix64 finalizer, one coordinate at a time.
//! Coordinates are positional, so `[1, 2]` and `[2, 1]` give distinct streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the job at `path` below `root`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &coord| splitmix64(acc ^ splitmix64(coord)))
}

/// Stream-tag constants that separate purposes sharing one job path.
pub mod purpose {
    pub const INSTANCE: u64 = 0x1;
    pub const GRAPH: u64 = 0x2;
    pub const SOLVER: u64 = 0x3;
    pub const ORDER: u64 = 0x4;
}
