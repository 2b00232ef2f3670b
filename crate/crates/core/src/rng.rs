//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by an
//! explicit 64-bit seed plus a named stream id, so independent consumers
//! (training data, pool, reference sample, weight init, evaluation) never
//! share a sequence even when they share a seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    TrainingData,
    Pool,
    Reference,
    Init,
    Evaluation,
    Batching,
    Property,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::TrainingData => 1,
            Stream::Pool => 2,
            Stream::Reference => 3,
            Stream::Init => 4,
            Stream::Evaluation => 5,
            Stream::Batching => 6,
            Stream::Property => 7,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
