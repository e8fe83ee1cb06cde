//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit master seed and a stream id, so independent experiments (trials,
//! blocks) can run in any order or on any thread and still see the same bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream `stream`, starting `substream * 2^48` words in. Substreams do not
/// overlap as long as each consumes fewer than 2^48 words; substream 0 is
/// identical to [`stream_rng`].
pub fn substream_rng(master_seed: u64, stream: u64, substream: u64) -> StreamRng {
    let mut rng = stream_rng(master_seed, stream);
    rng.set_word_pos(u128::from(substream) << 48);
    rng
}
