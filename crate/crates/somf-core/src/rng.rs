//! Seeded random streams.
//!
//! All stochastic decisions (masks, sample order, atom order, dictionary
//! initialization) draw from independent sub-streams of a ChaCha8
//! counter-based generator, so every run is bit-reproducible from a single
//! 64-bit seed and consuming one stream never perturbs another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_MASKS: u64 = 1;
pub const STREAM_SAMPLES: u64 = 2;
pub const STREAM_ATOMS: u64 = 3;
pub const STREAM_INIT: u64 = 4;
pub const STREAM_DATA: u64 = 5;

/// Factory for the per-purpose RNG sub-streams of one run.
#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent generator for the given stream id.
    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}
