use nalgebra::DVector;
use rand::Rng;

use super::{Problem, ProblemKind};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// `u(x) = x⁴/4` on `|x| ≤ 1`, `|x| − 3/4` outside.
pub fn quartic_u(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.25 * x.powi(4)
    } else {
        x.abs() - 0.75
    }
}

/// `u′(x) = x³` on `|x| ≤ 1`, `sign(x)` outside.
pub fn quartic_u_prime(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x.powi(3)
    } else {
        x.signum()
    }
}

/// Scalar convex problem `f_i(x) = u(x) + b_i x` with `Σ b_i = 0`.
///
/// The aggregate is `u` itself: convex, not quasi-strongly convex, with the
/// unique minimiser 0 and `f* = 0`. Every `u′` is 3-Lipschitz (`sup |u″| = 3`
/// on the quartic branch).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuartic {
    offsets: Vec<f64>,
    seed: Option<u64>,
}

/// Draws `b_i` uniformly on `[−1, 1]` and recentres them to sum to zero.
pub fn make_piecewise_quartic(n: usize, seed: u64) -> Result<PiecewiseQuartic> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "piecewise-quartic problem needs n ≥ 2 agents, got {n}"
        )));
    }
    let mut rng = rng::stream(seed, Stream::Offsets);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut pq = PiecewiseQuartic::with_offsets(raw)?;
    pq.seed = Some(seed);
    Ok(pq)
}

impl PiecewiseQuartic {
    /// Uses the given offsets after subtracting their mean.
    pub fn with_offsets(offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() < 2 {
            return Err(Error::InvalidParameter("need at least two offsets".into()));
        }
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        Ok(PiecewiseQuartic {
            offsets: offsets.into_iter().map(|b| b - mean).collect(),
            seed: None,
        })
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

impl Problem for PiecewiseQuartic {
    fn agents(&self) -> usize {
        self.offsets.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn local_value(&self, agent: usize, x: &DVector<f64>) -> f64 {
        quartic_u(x[0]) + self.offsets[agent] * x[0]
    }

    fn local_grad(&self, agent: usize, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, quartic_u_prime(x[0]) + self.offsets[agent])
    }

    fn local_smoothness(&self, _agent: usize) -> f64 {
        3.0
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::PiecewiseQuartic
    }

    fn optimal_value(&self) -> f64 {
        0.0
    }

    fn project(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(1)
    }

    // Σ b_i = 0 cancels the linear terms exactly in exact arithmetic; the
    // closed forms avoid the O(ε) residue of summing the recentred offsets.
    fn value(&self, x: &DVector<f64>) -> f64 {
        quartic_u(x[0])
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, quartic_u_prime(x[0]))
    }
}
