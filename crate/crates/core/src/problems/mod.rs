//! Local objectives `f_i` and the geometry of their optimal sets.
//!
//! The aggregate objective is always `f = (1/n) Σ f_i`.

mod composite;
mod constants;
mod quartic;
mod regression;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use composite::{
    coercivity_check, constant_d, hoffman_constant, project_to_optimal, ChConvention, CompositeStructure, RANK_TOL,
};
pub use constants::TheoryConstants;
pub use quartic::{make_piecewise_quartic, quartic_u, quartic_u_prime, PiecewiseQuartic};
pub use regression::{make_regression, Regression, RegressionFixture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    CompositeQuadratic,
    PiecewiseQuartic,
    Custom,
}

/// Per-agent cost and gradient oracles.
///
/// Implementations must be pure: the same inputs always produce the same
/// outputs, which is what makes trajectories reproducible.
pub trait Problem: Send + Sync {
    /// Number of agents `n`.
    fn agents(&self) -> usize;

    /// Decision dimension `p`.
    fn dim(&self) -> usize;

    fn local_value(&self, agent: usize, x: &DVector<f64>) -> f64;

    fn local_grad(&self, agent: usize, x: &DVector<f64>) -> DVector<f64>;

    /// Lipschitz constant `L_i` of `∇f_i`.
    fn local_smoothness(&self, agent: usize) -> f64;

    fn kind(&self) -> ProblemKind;

    /// Optimal value `f*` of the aggregate.
    fn optimal_value(&self) -> f64;

    /// Euclidean projection `[x]` onto the optimal set `X*`.
    fn project(&self, x: &DVector<f64>) -> DVector<f64>;

    fn composite(&self) -> Option<&CompositeStructure> {
        None
    }

    /// `L = max_i L_i`.
    fn smoothness(&self) -> f64 {
        (0..self.agents()).map(|i| self.local_smoothness(i)).fold(0.0, f64::max)
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.agents();
        (0..n).map(|i| self.local_value(i, x)).sum::<f64>() / n as f64
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.agents();
        let mut g = DVector::zeros(self.dim());
        for i in 0..n {
            g += self.local_grad(i, x);
        }
        g / n as f64
    }
}

/// Central finite-difference gradient of a scalar function.
pub fn finite_difference_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, step: f64) -> DVector<f64> {
    let mut probe = x.clone();
    DVector::from_fn(x.len(), |j, _| {
        let orig = probe[j];
        probe[j] = orig + step;
        let plus = f(&probe);
        probe[j] = orig - step;
        let minus = f(&probe);
        probe[j] = orig;
        (plus - minus) / (2.0 * step)
    })
}

/// `‖∇f_i(x) − ∇f_i(y)‖ / ‖x − y‖`; must not exceed `L_i`.
pub fn gradient_lipschitz_ratio<P: Problem + ?Sized>(
    problem: &P,
    agent: usize,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    let dx = (x - y).norm();
    if dx == 0.0 {
        return 0.0;
    }
    (problem.local_grad(agent, x) - problem.local_grad(agent, y)).norm() / dx
}
