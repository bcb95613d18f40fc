//! Seeded random streams.
//!
//! Every random draw in the crate goes through an explicit [`ChaCha8Rng`]
//! obtained here. Independent purposes (observation network, prior noise,
//! sketches of a given outer loop, ...) use distinct streams of the same seed,
//! so adding draws for one purpose never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Matrix, Vector};

pub const NETWORK_STREAM: u64 = 1;
pub const PRIOR_NOISE_STREAM: u64 = 2;
pub const OBS_NOISE_STREAM: u64 = 3;
pub const SKETCH_STREAM: u64 = 1 << 16;
pub const PERTURBATION_STREAM: u64 = 2 << 16;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Column-major fill, so column `j` only depends on draws before it.
pub fn normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}
