//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the experiment seed, with the
//! ChaCha stream counter selecting an independent sequence. Stream ids are
//! derived from the replicate index alone, so replicate `r` draws the same
//! numbers no matter how many replicates run alongside it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tag mixed into the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Data = 0,
    Prior = 1,
    Posterior = 2,
}

/// Independent stream for `(seed, replicate, purpose)`.
pub fn stream(seed: u64, replicate: u64, purpose: StreamPurpose) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate.wrapping_mul(4).wrapping_add(purpose as u64));
    rng
}
