//! Seeded, splittable random streams.
//!
//! One master seed fans out into independent ChaCha streams keyed by an
//! integer id (trial index, sample block). The stream a given id sees never
//! depends on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per stream in block-parallel Monte Carlo loops.
pub const BLOCK_SIZE: u64 = 1 << 14;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
