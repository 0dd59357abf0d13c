//! Seeded, portable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the
//! experiment seed, with a distinct stream id per role. Changing how many
//! numbers one role consumes never perturbs another role.

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Role of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Data matrices h_i.
    Matrix,
    /// Planted solutions x̃_i.
    Planted,
    /// Initial iterates x_{i,0}.
    Init,
    /// Linear offsets b_i of the piecewise-quartic problem.
    Offsets,
    /// Sampling done by verification batteries.
    Verify,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Matrix => 1,
            Stream::Planted => 2,
            Stream::Init => 3,
            Stream::Offsets => 4,
            Stream::Verify => 5,
        }
    }
}

pub fn stream(seed: u64, role: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role.id());
    rng
}

pub fn uniform_matrix<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let dist = Uniform::new_inclusive(lo, hi);
    // Row-major draw order keeps fixtures readable when dumped.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = dist.sample(rng);
        }
    }
    m
}

pub fn uniform_vector<R: rand::Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> DVector<f64> {
    let dist = Uniform::new_inclusive(lo, hi);
    DVector::from_fn(len, |_, _| dist.sample(rng))
}

pub fn gaussian_vector<R: rand::Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}
