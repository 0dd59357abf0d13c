//! Simulation and verification toolkit for NEAR-DGD+, the nested-consensus
//! decentralized gradient method
//!
//! ```text
//! x_{k+1} = (W^{t(k)} ⊗ I_p)(x_k − μ ∇F(x_k))
//! ```
//!
//! The crate is organised around five layers:
//!
//! * [`net`]: topologies, doubly-stochastic consensus matrices and the
//!   spectral quantity β = ‖W − (1/n)11ᵀ‖₂.
//! * [`problems`]: local objectives, composite-structure geometry
//!   (projection onto the optimal set, Hoffman constant, D).
//! * [`dynamics`]: the recursion itself, consensus schedules, trajectory
//!   metrics, cost accounting and the recursive-inequality monitors.
//! * [`theory`]: closed-form convergence bounds and lemma verifiers.
//! * [`harness`]: experiment presets, configuration, CSV output and the
//!   `verify`/`inspect` batteries used by the CLI.
//!
//! Stacked iterates are stored as an `n × p` matrix whose row `i` is agent
//! `i`'s iterate, so `(W^t ⊗ I_p) x` is simply `W^t X`.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod net;
pub mod par;
pub mod problems;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};

pub use dynamics::{
    averaged_step, cost, near_dgd_step, run, CostWeights, RunOptions, Schedule, StackedState, Trajectory,
    TrajectoryRecord,
};
pub use net::{ConsensusMatrix, Topology, WeightScheme};
pub use problems::{CompositeStructure, PiecewiseQuartic, Problem, Regression};
