use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::config::{ExperimentConfig, GraphSpec, MetricSpec, ProblemSpec, StepRule};
use crate::dynamics::{
    self, monitor, InequalitySystem, Init, MetricReference, MonitorParams, RunOptions, Schedule, Trajectory,
};
use crate::error::{Error, Result};
use crate::net::{ConsensusMatrix, Topology};
use crate::par::Execution;
use crate::problems::{constant_d, make_piecewise_quartic, make_regression, Problem, TheoryConstants};
use crate::theory::{
    bound_fixed_schedule, linear_phase_rate, nondecreasing_series, stepsize_caps, BoundInputs, RateFit,
};

/// Relative slack on bound dominance, scaled by `1 + A₀` (or `1 + B₀`).
pub const BOUND_SLACK: f64 = 1e-6;

/// Problem, consensus matrix and derived constants of a configuration.
pub struct Instance {
    problem: Box<dyn Problem>,
    consensus: ConsensusMatrix,
    constants: Option<TheoryConstants>,
    reference: MetricReference,
    d: f64,
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let problem: Box<dyn Problem> = match cfg.problem {
            ProblemSpec::Regression { p, n, s, seed } => {
                Box::new(make_regression(p, n, s, seed)?.with_convention(cfg.ch_convention))
            }
            ProblemSpec::PiecewiseQuartic { n, seed } => Box::new(make_piecewise_quartic(n, seed)?),
        };
        let n = problem.agents();
        let topo = match cfg.graph {
            GraphSpec::Circulant { radius, .. } => Topology::circulant(n, radius)?,
            GraphSpec::Complete { .. } => Topology::complete(n)?,
        };
        let consensus = ConsensusMatrix::from_topology(&topo, cfg.graph.weights())?;
        let constants = problem
            .composite()
            .map(|cs| TheoryConstants::new(cs, problem.smoothness()));
        let reference = match &cfg.metric {
            MetricSpec::Projection => MetricReference::Projection,
            MetricSpec::Point(x) => MetricReference::Point(DVector::from_column_slice(x)),
        };
        let d = match (&reference, problem.composite()) {
            (MetricReference::Projection, Some(cs)) => constant_d(problem.as_ref(), cs)?,
            (MetricReference::Projection, None) => {
                gradient_spread(problem.as_ref(), &problem.project(&DVector::zeros(problem.dim())))
            }
            (MetricReference::Point(x), _) => gradient_spread(problem.as_ref(), x),
        };
        Ok(Instance {
            problem,
            consensus,
            constants,
            reference,
            d,
        })
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem.as_ref()
    }

    pub fn consensus(&self) -> &ConsensusMatrix {
        &self.consensus
    }

    pub fn constants(&self) -> Option<&TheoryConstants> {
        self.constants.as_ref()
    }

    /// `D = (Σ_j ‖∇f_j(x*)‖²)^{1/2}` at the reference minimiser.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn reference(&self) -> &MetricReference {
        &self.reference
    }

    /// Step size for `schedule` under `rule`.
    pub fn resolve_mu(&self, rule: StepRule, schedule: &Schedule) -> Result<f64> {
        match rule {
            StepRule::Fixed { mu } => Ok(mu),
            StepRule::InverseL { factor } => Ok(factor / self.problem.smoothness()),
            StepRule::CompositeCap { factor } => {
                let constants = self
                    .constants
                    .as_ref()
                    .ok_or_else(|| Error::Config("composite-cap step rule needs a composite problem".into()))?;
                let caps = stepsize_caps(constants, self.consensus.beta(), schedule.initial_rounds())?;
                Ok(factor * caps.composite)
            }
        }
    }

    /// Which hypotheses μ satisfies, as `(composite, convex, ergodic)`.
    fn admissibility(&self, mu: f64, schedule: &Schedule) -> (Option<bool>, bool, bool) {
        let l = self.problem.smoothness();
        let composite = self.constants.as_ref().map(|c| {
            stepsize_caps(c, self.consensus.beta(), schedule.initial_rounds())
                .map(|caps| caps.admissible(mu).composite)
                .unwrap_or(false)
        });
        (composite, mu <= 2.0 / l, mu <= 1.0 / l)
    }
}

/// `(Σ_j ‖∇f_j(x)‖²)^{1/2}`.
fn gradient_spread(problem: &dyn Problem, x: &DVector<f64>) -> f64 {
    (0..problem.agents())
        .map(|j| problem.local_grad(j, x).norm_squared())
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Passed {
        worst_excess: f64,
    },
    Failed {
        violations: usize,
        first_k: usize,
        worst_excess: f64,
    },
    Skipped(String),
}

impl Verdict {
    pub fn failed(&self) -> bool {
        matches!(self, Verdict::Failed { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Passed { .. } => write!(f, "pass"),
            Verdict::Failed {
                violations, first_k, ..
            } => write!(f, "FAIL({violations} from k={first_k})"),
            Verdict::Skipped(_) => write!(f, "skipped"),
        }
    }
}

/// Verdict of one inequality family along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorOutcome {
    pub name: &'static str,
    pub verdict: Verdict,
}

/// One schedule of an experiment.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub schedule: Schedule,
    pub mu: f64,
    pub trajectory: Trajectory,
    pub bound_fixed: Option<Vec<f64>>,
    pub bound_nondecreasing: Option<Vec<Option<f64>>>,
    pub monitors: Vec<MonitorOutcome>,
    pub rate: Option<RateFit>,
    pub warnings: Vec<String>,
}

impl CaseResult {
    pub fn monitors_passed(&self) -> bool {
        self.monitors.iter().all(|m| !m.verdict.failed())
    }
}

/// Runs one schedule and evaluates every applicable monitor and bound.
pub fn run_case(cfg: &ExperimentConfig, inst: &Instance, schedule: &Schedule) -> Result<CaseResult> {
    let mu = inst.resolve_mu(cfg.step, schedule)?;
    let (composite_ok, convex_ok, ergodic_ok) = inst.admissibility(mu, schedule);
    let mut warnings = Vec::new();
    let mut refuse = Vec::new();
    match composite_ok {
        Some(false) => refuse.push("μ exceeds the composite cap".to_string()),
        None if !convex_ok => refuse.push("μ exceeds 2/L".to_string()),
        _ => {}
    }
    if !ergodic_ok && composite_ok.is_none() {
        warnings.push(format!(
            "μ = {mu} exceeds 1/L; the ergodic-rate hypothesis does not hold"
        ));
    }
    if !refuse.is_empty() {
        let reason = refuse.join("; ");
        if !cfg.allow_inadmissible {
            return Err(Error::Inadmissible { mu, reason });
        }
        warnings.push(format!("μ = {mu}: {reason}; proceeding"));
    }

    let problem = inst.problem();
    let beta = inst.consensus().beta();
    let opts = RunOptions {
        reference: inst.reference().clone(),
    };
    let init = Init::Uniform {
        seed: cfg.problem.seed(),
    };
    let traj = dynamics::run_with(problem, inst.consensus(), schedule, mu, cfg.iterations, &init, &opts)?;
    if traj.drift_flagged() {
        warnings.push(format!(
            "block average drifted from the averaged recursion by {:e}",
            traj.max_average_drift
        ));
    }

    let l = problem.smoothness();
    let params = MonitorParams {
        mu,
        l_max: l,
        beta,
        d: inst.d(),
    };
    let mut monitors = Vec::new();
    let convex = if convex_ok {
        verdict_of(&monitor(&traj, InequalitySystem::Convex, &params))
    } else {
        Verdict::Skipped("μ > 2/L".into())
    };
    monitors.push(MonitorOutcome {
        name: "eq-3-50",
        verdict: convex,
    });

    let mut bound_fixed = None;
    let mut bound_nondecreasing = None;
    if let Some(constants) = inst.constants() {
        let projection = matches!(inst.reference(), MetricReference::Projection);
        let hoffman_ok = mu <= constants.cap_composite();
        let composite = if !projection {
            Verdict::Skipped("metric is not the projection distance".into())
        } else if !hoffman_ok {
            Verdict::Skipped("μ > 2C_H/(**L**+α)".into())
        } else {
            let sys = InequalitySystem::Composite { q: constants.q(mu) };
            verdict_of(&monitor(&traj, sys, &params))
        };
        monitors.push(MonitorOutcome {
            name: "eq-4-1",
            verdict: composite,
        });

        if let (true, Some(first)) = (projection && composite_ok == Some(true), traj.first()) {
            match BoundInputs::new(constants, beta, *schedule, mu, first.a, first.b, inst.d()) {
                Ok(inputs) => {
                    let (fixed, fixed_v) = fixed_bounds(&traj, &inputs);
                    if let Some(v) = fixed_v {
                        monitors.push(MonitorOutcome {
                            name: "bound-eq-5-24",
                            verdict: v,
                        });
                    }
                    bound_fixed = fixed;
                    let series = nondecreasing_series(&inputs, traj.len() - 1, cfg.bound_form);
                    monitors.push(MonitorOutcome {
                        name: "bound-eq-5-40",
                        verdict: dominance(&traj, &series, inputs.a0, inputs.b0),
                    });
                    bound_nondecreasing = Some(series.iter().map(|e| e.map(|(a, _)| a)).collect());
                }
                Err(e) => warnings.push(format!("bounds not evaluated: {e}")),
            }
        }
    }

    let rate = linear_phase_rate(&traj.a());
    Ok(CaseResult {
        schedule: *schedule,
        mu,
        trajectory: traj,
        bound_fixed,
        bound_nondecreasing,
        monitors,
        rate,
        warnings,
    })
}

fn verdict_of(report: &dynamics::MonitorReport) -> Verdict {
    match report.first_violation {
        None => Verdict::Passed {
            worst_excess: report.worst_excess,
        },
        Some(k) => Verdict::Failed {
            violations: report.violations,
            first_k: k,
            worst_excess: report.worst_excess,
        },
    }
}

fn fixed_bounds(traj: &Trajectory, inputs: &BoundInputs) -> (Option<Vec<f64>>, Option<Verdict>) {
    if !inputs.schedule.is_constant() {
        return (None, None);
    }
    let series: Vec<Option<(f64, f64)>> = (0..traj.len()).map(|k| bound_fixed_schedule(inputs, k).ok()).collect();
    let verdict = dominance(traj, &series, inputs.a0, inputs.b0);
    (
        Some(series.iter().map(|e| e.map_or(f64::NAN, |(a, _)| a)).collect()),
        Some(verdict),
    )
}

/// Checks `A_k ≤ bound_A(k)` and `B_k ≤ bound_B(k)` wherever a bound exists.
pub fn dominance(traj: &Trajectory, series: &[Option<(f64, f64)>], a0: f64, b0: f64) -> Verdict {
    let (mut violations, mut first_k, mut worst) = (0, None, f64::NEG_INFINITY);
    for (rec, bound) in traj.records.iter().zip(series) {
        let Some((ba, bb)) = bound else { continue };
        for (excess, scale) in [(rec.a - ba, 1.0 + a0), (rec.b - bb, 1.0 + b0)] {
            let rel = excess / scale;
            worst = worst.max(rel);
            if rel > BOUND_SLACK {
                violations += 1;
                first_k.get_or_insert(rec.k);
            }
        }
    }
    match first_k {
        None => Verdict::Passed { worst_excess: worst },
        Some(k) => Verdict::Failed {
            violations,
            first_k: k,
            worst_excess: worst,
        },
    }
}

/// One row of the experiment summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub schedule: Schedule,
    pub mu: f64,
    pub c_g: f64,
    pub c_c: f64,
    pub final_k: usize,
    pub final_a: f64,
    pub final_b: f64,
    pub final_regret: f64,
    pub final_cost: f64,
    pub decay_rate: Option<f64>,
    pub monitors: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub name: String,
    pub rows: Vec<SummaryRow>,
    pub cases: Vec<CaseResult>,
    pub warnings: Vec<String>,
    pub summary_path: PathBuf,
}

impl ExperimentSummary {
    pub fn monitors_passed(&self) -> bool {
        self.cases.iter().all(CaseResult::monitors_passed)
    }

    pub fn files(&self) -> Vec<&Path> {
        self.rows.iter().map(|r| r.path.as_path()).collect()
    }
}

impl fmt::Display for ExperimentSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment `{}`", self.name)?;
        writeln!(
            f,
            "{:<14} {:>10} {:>12} {:>12} {:>12} {:>12} {:>9}  monitors",
            "schedule", "mu", "cost(c_g,c_c)", "A_K", "B_K", "regret_K", "rate"
        )?;
        for r in &self.rows {
            let rate = r.decay_rate.map_or("-".to_string(), |v| format!("{v:.6}"));
            writeln!(
                f,
                "{:<14} {:>10.3e} {:>12} {:>12.4e} {:>12.4e} {:>12.4e} {:>9}  {}",
                r.schedule.slug(),
                r.mu,
                format!("({},{})", r.c_g, r.c_c),
                r.final_a,
                r.final_b,
                r.final_regret,
                rate,
                r.monitors
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Writes the per-iterate CSV of one (schedule, cost pair) combination.
pub fn write_case_csv(path: &Path, case: &CaseResult, costs: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "t_k",
        "A_k",
        "B_k",
        "regret",
        "ergodic_gap",
        "cum_comm",
        "cum_grad",
        "cum_cost",
        "bound_eq_5_24",
        "bound_eq_5_40",
    ])?;
    for (i, rec) in case.trajectory.records.iter().enumerate() {
        let b24 = case.bound_fixed.as_ref().map_or(String::new(), |v| fmt_float(v[i]));
        let b40 = case
            .bound_nondecreasing
            .as_ref()
            .and_then(|v| v[i])
            .map_or(String::new(), fmt_float);
        w.write_record([
            rec.k.to_string(),
            rec.t_k.to_string(),
            fmt_float(rec.a),
            fmt_float(rec.b),
            fmt_float(rec.regret),
            fmt_float(rec.ergodic_gap),
            rec.cum_comm.to_string(),
            rec.cum_grad.to_string(),
            fmt_float(costs[i]),
            b24,
            b40,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    run_experiment_with(cfg, Execution::default())
}

/// Runs every schedule of `cfg`, writes one CSV per (schedule, cost pair)
/// plus `summary.csv` into `cfg.output`.
pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let inst = Instance::build(cfg)?;
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;

    let outcomes = exec.map(&cfg.schedules, |schedule| -> Result<(CaseResult, Vec<SummaryRow>)> {
        let case = run_case(cfg, &inst, schedule)?;
        let mut rows = Vec::new();
        for weights in &cfg.costs {
            let costs = dynamics::cost(&case.trajectory, weights)?;
            let path = cfg
                .output
                .join(format!("{}_{}_{}.csv", cfg.name, schedule.slug(), weights.slug()));
            write_case_csv(&path, &case, &costs)?;
            let last = case.trajectory.last();
            rows.push(SummaryRow {
                schedule: *schedule,
                mu: case.mu,
                c_g: weights.c_g,
                c_c: weights.c_c,
                final_k: last.map_or(0, |r| r.k),
                final_a: last.map_or(f64::NAN, |r| r.a),
                final_b: last.map_or(f64::NAN, |r| r.b),
                final_regret: last.map_or(f64::NAN, |r| r.regret),
                final_cost: costs.last().copied().unwrap_or(0.0),
                decay_rate: case.rate.map(|r| r.rate),
                monitors: case
                    .monitors
                    .iter()
                    .map(|m| format!("{}:{}", m.name, m.verdict))
                    .collect::<Vec<_>>()
                    .join(";"),
                path,
            });
        }
        Ok((case, rows))
    });

    let mut cases = Vec::new();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for outcome in outcomes {
        let (case, r) = outcome?;
        warnings.extend(case.warnings.iter().map(|w| format!("{}: {w}", case.schedule.slug())));
        cases.push(case);
        rows.extend(r);
    }

    let summary_path = cfg.output.join(format!("{}_summary.csv", cfg.name));
    let mut w = csv::Writer::from_path(&summary_path)?;
    w.write_record([
        "schedule",
        "mu",
        "c_g",
        "c_c",
        "final_k",
        "final_A",
        "final_B",
        "final_regret",
        "final_cost",
        "decay_rate",
        "monitors",
        "file",
    ])?;
    for r in &rows {
        w.write_record([
            r.schedule.slug(),
            fmt_float(r.mu),
            fmt_float(r.c_g),
            fmt_float(r.c_c),
            r.final_k.to_string(),
            fmt_float(r.final_a),
            fmt_float(r.final_b),
            fmt_float(r.final_regret),
            fmt_float(r.final_cost),
            r.decay_rate.map_or(String::new(), fmt_float),
            r.monitors.clone(),
            r.path
                .file_name()
                .map_or(String::new(), |n| n.to_string_lossy().into_owned()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    Ok(ExperimentSummary {
        name: cfg.name.clone(),
        rows,
        cases,
        warnings,
        summary_path,
    })
}
