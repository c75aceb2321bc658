//! The single seedable generator behind every stochastic step.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`, with one stream per consumer:
//!
//! | stream | consumer |
//! |--------|----------|
//! | 0 | parameter initialization: entity table row-major, then relation blocks in relation-id order |
//! | 1 | training: per epoch, the shuffle, then per triplet the subject corruption draws followed by the object corruption draws, then any zero-row renormalization draws |
//! | 2 | word-averaged initialization: random vectors for out-of-vocabulary words, in order of first use |
//!
//! Uniform reals in `[-b, b)` are drawn as `b * (2u - 1)` with `u = rng.random::<f64>()`.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Training = 1,
    WordVectors = 2,
}

pub fn generator(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub(crate) fn uniform_symmetric(rng: &mut Rng, bound: f64) -> f64 {
    bound * (2.0 * rng.random::<f64>() - 1.0)
}
