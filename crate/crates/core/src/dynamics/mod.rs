//! The NEAR-DGD+ recursion, its schedules and the metrics recorded along a run.

mod cost;
mod engine;
mod monitor;
mod schedule;
mod state;

pub use cost::{cost, CostWeights};
pub use engine::{
    averaged_step, near_dgd_step, run, run_with, Init, MetricReference, RunOptions, Trajectory, TrajectoryRecord,
    AVERAGE_DRIFT_TOL, DIVERGENCE_LIMIT,
};
pub use monitor::{monitor, InequalitySystem, MonitorParams, MonitorReport, MONITOR_SLACK};
pub use schedule::Schedule;
pub use state::StackedState;
