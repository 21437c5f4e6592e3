//! Seeded random streams.
//!
//! Every random consumer takes a `(seed, stream)` pair and draws from its own
//! ChaCha stream, so independent consumers never share generator state and the
//! whole pipeline is reproducible from a single seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Well-known stream identifiers.
pub mod streams {
    pub const SAMPLER: u64 = 0;
    pub const MODEL_INIT: u64 = 1;
    pub const LABELS: u64 = 2;
    pub const ORACLE: u64 = 3;
}
