//! Seed splitting.
//!
//! Every random consumer gets its own ChaCha8 stream: the 64-bit root seed keys the
//! generator and `(purpose, index)` selects the stream. ChaCha is counter based, so
//! streams are independent and the result of a trial never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a derived stream is used for. Keeps e.g. encoding noise and sensor noise of
/// the same trial decorrelated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Trial = 1,
    Encoding = 2,
    InputNoise = 3,
    WeightNoise = 4,
    Init = 5,
    Shuffle = 6,
    Data = 7,
    Eval = 8,
}

pub fn from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of `purpose` under `root`.
pub fn stream(root: u64, purpose: Purpose, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(((purpose as u64) << 56) ^ index);
    rng
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn child_seed(root: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    stream(root, purpose, index).next_u64()
}
