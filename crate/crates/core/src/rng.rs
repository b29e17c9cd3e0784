//! Seeded random streams.
//!
//! All randomness goes through ChaCha8, a counter-based generator whose
//! output is specified independently of platform. A `(seed, stream)` pair
//! selects an independent sequence, so e.g. an instance and its initial point
//! can share a user-facing seed without sharing random numbers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used for instance data (sensor positions, graphs).
pub const STREAM_INSTANCE: u64 = 0;
/// Stream used for measurement noise.
pub const STREAM_NOISE: u64 = 1;
/// Stream used for initial points.
pub const STREAM_START: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n × r` matrix with entries uniform in `[-0.5, 0.5)`, filled row by row.
pub fn uniform_centered(rng: &mut impl Rng, n: usize, r: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, r);
    for i in 0..n {
        for j in 0..r {
            out[(i, j)] = rng.random::<f64>() - 0.5;
        }
    }
    out
}
