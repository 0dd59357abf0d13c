use nalgebra::{DMatrix, DVector};

use super::schedule::Schedule;
use super::state::{block_average, consensus_error, StackedState};
use crate::error::{Error, Result};
use crate::net::ConsensusMatrix;
use crate::problems::Problem;

/// Abort threshold on `‖x_k‖`.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Allowed disagreement between the block average after a step and the
/// averaged recursion, relative to `1 + ‖x̄‖`.
pub const AVERAGE_DRIFT_TOL: f64 = 1e-8;

/// Point against which the optimality metric `A_k` is measured.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MetricReference {
    /// `A_k = √n‖x̄_k − [x̄_k]‖` using the problem's projection.
    #[default]
    Projection,
    /// `A_k = √n‖x̄_k − x*‖` for a fixed minimiser.
    Point(DVector<f64>),
}

/// Starting iterate of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Entries uniform on `[0, 1]` from the seed's init stream.
    Uniform { seed: u64 },
    /// Explicit stacked state, `n × p`.
    Blocks(DMatrix<f64>),
}

impl Init {
    pub fn state(&self, n: usize, p: usize) -> Result<StackedState> {
        match self {
            Init::Uniform { seed } => Ok(StackedState::uniform(n, p, *seed)),
            Init::Blocks(x) if x.shape() == (n, p) => Ok(StackedState::new(x.clone())),
            Init::Blocks(x) => Err(Error::DimensionMismatch {
                expected: format!("{n}×{p} initial state"),
                got: format!("{}×{}", x.nrows(), x.ncols()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub reference: MetricReference,
}

/// Metrics of the iterate `x_k`.
///
/// `t_k = t(k)` is the number of rounds the step leaving `x_k` applies;
/// the cumulative counters cover the steps `j < k` that produced `x_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub k: usize,
    pub t_k: u32,
    /// Optimality metric `A_k`.
    pub a: f64,
    /// Consensus error `B_k = ‖x_k − x̄_k‖`.
    pub b: f64,
    /// `(1/n) Σ_i (f(x_{i,k}) − f*)`.
    pub regret: f64,
    /// `f((1/(k+1)) Σ_{j≤k} x̄_j) − f*`.
    pub ergodic_gap: f64,
    pub cum_comm: u64,
    pub cum_grad: u64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub mu: f64,
    pub beta: f64,
    pub schedule: Schedule,
    pub agents: usize,
    pub dim: usize,
    /// Largest `‖avg(x_{k+1}) − averaged_step(x_k)‖ / (1 + ‖x̄_k‖)` seen.
    pub max_average_drift: f64,
    pub final_state: Option<StackedState>,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn drift_flagged(&self) -> bool {
        self.max_average_drift > AVERAGE_DRIFT_TOL
    }

    pub fn a(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.a).collect()
    }

    pub fn b(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.b).collect()
    }

    pub fn first(&self) -> Option<&TrajectoryRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }
}

fn check_dims<P: Problem + ?Sized>(x: &DMatrix<f64>, w: &ConsensusMatrix, problem: &P) -> Result<()> {
    if x.nrows() != w.n() || x.nrows() != problem.agents() || x.ncols() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{} state for W of size {}", problem.agents(), problem.dim(), w.n()),
            got: format!("{}×{}", x.nrows(), x.ncols()),
        });
    }
    Ok(())
}

/// Overwrites `out` with `x − μ∇F(x)`.
fn gradient_stage<P: Problem + ?Sized>(
    x: &DMatrix<f64>,
    mu: f64,
    problem: &P,
    k: usize,
    out: &mut DMatrix<f64>,
) -> Result<()> {
    for i in 0..x.nrows() {
        let xi = x.row(i).transpose();
        let g = problem.local_grad(i, &xi);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                k,
                agent: i,
                iterate: xi.iter().copied().collect(),
            });
        }
        for j in 0..x.ncols() {
            out[(i, j)] = x[(i, j)] - mu * g[j];
        }
    }
    Ok(())
}

/// One NEAR-DGD+ iteration: `x' = (W^{t(k)} ⊗ I_p)(x − μ∇F(x))`.
pub fn near_dgd_step<P: Problem + ?Sized>(
    state: &StackedState,
    w: &ConsensusMatrix,
    schedule: &Schedule,
    mu: f64,
    problem: &P,
) -> Result<StackedState> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and ≥ 0, got {mu}"
        )));
    }
    check_dims(&state.x, w, problem)?;
    let t = schedule.rounds(state.k);
    let mut next = DMatrix::zeros(state.x.nrows(), state.x.ncols());
    gradient_stage(&state.x, mu, problem, state.k, &mut next)?;
    let mut scratch = DMatrix::zeros(next.nrows(), next.ncols());
    w.apply_in_place(&mut next, &mut scratch, t);
    Ok(StackedState {
        x: next,
        k: state.k + 1,
        comm_rounds: state.comm_rounds + t as u64,
        grad_rounds: state.grad_rounds + 1,
    })
}

/// Averaged recursion `x̄' = x̄ − μ(1/n) Σ_j ∇f_j(x_j)`.
pub fn averaged_step<P: Problem + ?Sized>(
    average: &DVector<f64>,
    mu: f64,
    problem: &P,
    x_full: &DMatrix<f64>,
) -> DVector<f64> {
    let n = x_full.nrows();
    let mut g = DVector::zeros(average.len());
    for i in 0..n {
        g += problem.local_grad(i, &x_full.row(i).transpose());
    }
    average - g * (mu / n as f64)
}

/// Applies `W^t` inside a run.
///
/// Long schedules make `t` successive applications the dominant cost, so the
/// mixer can keep `W^t` and advance it with `n × n` products. The choice is
/// made on the per-step increment `t − t_prev`: catching the cache up is paid
/// once, after which each step costs `(t − t_prev)·n³ + n²p` instead of
/// `t·n²p`. Schedules are nondecreasing, so the cache only moves forward; a
/// smaller `t` restarts it from the identity.
struct Mixer<'a> {
    w: &'a ConsensusMatrix,
    cached_t: u32,
    last_t: u32,
    power: DMatrix<f64>,
    tmp: DMatrix<f64>,
}

impl<'a> Mixer<'a> {
    fn new(w: &'a ConsensusMatrix) -> Self {
        let n = w.n();
        Mixer {
            w,
            cached_t: 0,
            last_t: 0,
            power: DMatrix::identity(n, n),
            tmp: DMatrix::zeros(n, n),
        }
    }

    fn apply(&mut self, x: &mut DMatrix<f64>, scratch: &mut DMatrix<f64>, t: u32) {
        let n = x.nrows() as u64;
        let p = x.ncols() as u64;
        if t < self.cached_t {
            self.cached_t = 0;
            self.power.fill_with_identity();
        }
        let step = t.saturating_sub(self.last_t) as u64;
        self.last_t = t;
        let direct = t as u64 * n * n * p;
        let cached = step * n * n * n + n * n * p;
        if cached >= direct {
            self.w.apply_in_place(x, scratch, t);
            return;
        }
        while self.cached_t < t {
            self.w.matrix().mul_to(&self.power, &mut self.tmp);
            std::mem::swap(&mut self.power, &mut self.tmp);
            self.cached_t += 1;
        }
        self.power.mul_to(x, scratch);
        std::mem::swap(x, scratch);
    }
}

/// Runs `iterations` steps from `init` with default options.
pub fn run<P: Problem + ?Sized>(
    problem: &P,
    w: &ConsensusMatrix,
    schedule: &Schedule,
    mu: f64,
    iterations: usize,
    init: &Init,
) -> Result<Trajectory> {
    run_with(problem, w, schedule, mu, iterations, init, &RunOptions::default())
}

/// Runs `iterations` steps and records `x_0, …, x_K`.
///
/// With `iterations == 0` nothing is executed and the trajectory is empty.
pub fn run_with<P: Problem + ?Sized>(
    problem: &P,
    w: &ConsensusMatrix,
    schedule: &Schedule,
    mu: f64,
    iterations: usize,
    init: &Init,
    opts: &RunOptions,
) -> Result<Trajectory> {
    schedule.validate()?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and ≥ 0, got {mu}"
        )));
    }
    let (n, p) = (problem.agents(), problem.dim());
    let mut state = init.state(n, p)?;
    check_dims(&state.x, w, problem)?;
    if let MetricReference::Point(x_star) = &opts.reference {
        if x_star.len() != p {
            return Err(Error::DimensionMismatch {
                expected: format!("reference point of length {p}"),
                got: format!("{}", x_star.len()),
            });
        }
    }

    let mut traj = Trajectory {
        records: Vec::with_capacity(if iterations == 0 { 0 } else { iterations + 1 }),
        mu,
        beta: w.beta(),
        schedule: *schedule,
        agents: n,
        dim: p,
        max_average_drift: 0.0,
        final_state: None,
    };
    if iterations == 0 {
        return Ok(traj);
    }

    let f_star = problem.optimal_value();
    let sqrt_n = (n as f64).sqrt();
    let mut ergodic_sum = DVector::zeros(p);
    let mut scratch = DMatrix::zeros(n, p);
    let mut staged = DMatrix::zeros(n, p);
    let mut mixer = Mixer::new(w);

    loop {
        let avg = block_average(&state.x);
        ergodic_sum += &avg;
        let reference = match &opts.reference {
            MetricReference::Projection => problem.project(&avg),
            MetricReference::Point(x) => x.clone(),
        };
        let regret = (0..n)
            .map(|i| problem.value(&state.x.row(i).transpose()) - f_star)
            .sum::<f64>()
            / n as f64;
        let ergodic = &ergodic_sum / (state.k + 1) as f64;
        traj.records.push(TrajectoryRecord {
            k: state.k,
            t_k: schedule.rounds(state.k),
            a: sqrt_n * (&avg - reference).norm(),
            b: consensus_error(&state.x),
            regret,
            ergodic_gap: problem.value(&ergodic) - f_star,
            cum_comm: state.comm_rounds,
            cum_grad: state.grad_rounds,
        });
        if state.k == iterations {
            break;
        }

        let t = schedule.rounds(state.k);
        gradient_stage(&state.x, mu, problem, state.k, &mut staged)?;
        let expected_avg = averaged_step(&avg, mu, problem, &state.x);
        std::mem::swap(&mut state.x, &mut staged);
        mixer.apply(&mut state.x, &mut scratch, t);
        state.k += 1;
        state.comm_rounds += t as u64;
        state.grad_rounds += 1;

        let drift = (block_average(&state.x) - expected_avg).norm() / (1.0 + avg.norm());
        traj.max_average_drift = traj.max_average_drift.max(drift);

        let norm = state.norm();
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { k: state.k, norm });
        }
    }
    traj.final_state = Some(state);
    Ok(traj)
}
