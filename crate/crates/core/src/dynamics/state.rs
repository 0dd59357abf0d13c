use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Stacked agent iterates `x_k ∈ R^{n·p}`, stored as an `n × p` matrix whose
/// row `i` is agent `i`'s block, plus iteration counters.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    pub x: DMatrix<f64>,
    /// Iteration index `k`.
    pub k: usize,
    /// `Σ_{j<k} t(j)`.
    pub comm_rounds: u64,
    /// Number of gradient rounds taken, equal to `k`.
    pub grad_rounds: u64,
}

impl StackedState {
    pub fn new(x: DMatrix<f64>) -> Self {
        StackedState {
            x,
            k: 0,
            comm_rounds: 0,
            grad_rounds: 0,
        }
    }

    /// Entries drawn uniformly on `[0, 1]` from the seed's init stream.
    pub fn uniform(n: usize, p: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, Stream::Init);
        Self::new(rng::uniform_matrix(&mut r, n, p, 0.0, 1.0))
    }

    pub fn from_blocks(blocks: &[DVector<f64>]) -> Result<Self> {
        let p = blocks.first().map_or(0, |b| b.len());
        if blocks.is_empty() || blocks.iter().any(|b| b.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: "a non-empty list of equally sized blocks".into(),
                got: format!("{:?}", blocks.iter().map(|b| b.len()).collect::<Vec<_>>()),
            });
        }
        Ok(Self::new(DMatrix::from_fn(blocks.len(), p, |i, j| blocks[i][j])))
    }

    pub fn agents(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn block(&self, agent: usize) -> DVector<f64> {
        self.x.row(agent).transpose()
    }

    /// `x̄ = (1/n) Σ x_i`.
    pub fn average(&self) -> DVector<f64> {
        block_average(&self.x)
    }

    /// `‖x − 1⊗x̄‖`.
    pub fn consensus_error(&self) -> f64 {
        consensus_error(&self.x)
    }

    pub fn norm(&self) -> f64 {
        self.x.norm()
    }
}

pub(crate) fn block_average(x: &DMatrix<f64>) -> DVector<f64> {
    x.row_mean().transpose()
}

pub(crate) fn consensus_error(x: &DMatrix<f64>) -> f64 {
    let avg = x.row_mean();
    x.row_iter().map(|r| (r - &avg).norm_squared()).sum::<f64>().sqrt()
}
