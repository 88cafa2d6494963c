//! Seeded random streams.
//!
//! Every random decision in the crate draws from a ChaCha8 stream keyed by a
//! user seed and a purpose tag, so results are reproducible across platforms
//! and independent of call order between purposes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream purposes. Each gets its own ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Priors = 1,
    Imbalance = 2,
    Synthesis = 3,
    Pool = 4,
    Init = 5,
    Shuffle = 6,
    Pairs = 7,
    Labels = 8,
}

pub fn stream(seed: u64, purpose: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Stream for a purpose that is further split by an index (e.g. epoch).
pub fn indexed_stream(seed: u64, purpose: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}
