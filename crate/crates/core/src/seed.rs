//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), seeded
//! with `seed_from_u64`. Independent consumers of one seed read disjoint
//! ChaCha streams so that, for example, changing the selection scheme never
//! perturbs the topology drawn for a trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in output headers.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology = 0,
    Selection = 1,
    Placement = 2,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial of a sweep:
/// `splitmix64(splitmix64(splitmix64(base) ^ point) ^ trial)`.
///
/// The seed depends only on the three indices, so each point's stream is
/// unaffected by how many other points or schemes a sweep contains.
pub fn trial_seed(base: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ point) ^ trial)
}
