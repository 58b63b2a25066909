//! Counter-based random streams.
//!
//! Every random draw in an experiment comes from a ChaCha stream selected by a key such as
//! `(purpose, run, lambda, twirl)`. Streams never share state, so results do not depend on
//! execution order or thread count, and the same key yields the same stream across configs
//! (common random numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Part of every key so unrelated draws never collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Epoch = 1,
    Epsilon0 = 2,
    Assignment = 3,
    Twirl = 4,
    Shots = 5,
    InvertedShots = 6,
    Other = 99,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(purpose: Purpose, key: &[u64]) -> u64 {
    key.iter()
        .fold(splitmix(purpose as u64), |acc, &k| splitmix(acc ^ splitmix(k)))
}

/// Returns the stream for `(seed, purpose, key)`.
pub fn stream(seed: u64, purpose: Purpose, key: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(purpose, key));
    rng
}
