//! Random stream derivation.
//!
//! Every Monte Carlo realization owns its own generator so that results do
//! not depend on scheduling. The realization seed is `master ^ index`; within
//! a realization, independent consumers (channel draw, each scheme's
//! randomization) get separate ChaCha streams of that seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers inside one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Channels = 0,
    Proposed = 1,
    MrtWithIrs = 2,
    WithoutIrs = 3,
}

pub fn realization_seed(master: u64, realization: u64) -> u64 {
    master ^ realization
}

pub fn stream(seed: u64, purpose: StreamPurpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
