//! Experiment configuration, presets, CSV output and the verification and
//! inspection batteries behind the CLI.

mod config;
mod experiment;
mod inspect;
mod verify;

pub use config::{
    preset, preset_piecewise, preset_regression, ExperimentConfig, GraphSpec, MetricSpec, ProblemSpec, StepRule,
};
pub use experiment::{
    dominance, run_case, run_experiment, run_experiment_with, write_case_csv, CaseResult, ExperimentSummary, Instance,
    MonitorOutcome, SummaryRow, Verdict, BOUND_SLACK,
};
pub use inspect::{inspect, CompositeSummary, InspectReport, ScheduleConstants};
pub use verify::{verify, VerifyReport, VerifyRow};
