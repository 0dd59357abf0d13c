use nalgebra::{DMatrix, DVector};
use neardgd::dynamics::{
    averaged_step, cost, monitor, near_dgd_step, run, run_with, CostWeights, InequalitySystem, Init, MetricReference,
    MonitorParams, RunOptions, Schedule, StackedState,
};
use neardgd::error::Error;
use neardgd::net::{ConsensusMatrix, Topology, WeightScheme};
use neardgd::problems::{
    constant_d, make_piecewise_quartic, make_regression, CompositeStructure, Problem, ProblemKind, Regression,
    TheoryConstants,
};
use neardgd::rng::{self, Stream};
use proptest::prelude::*;

fn single_agent() -> ConsensusMatrix {
    ConsensusMatrix::new(DMatrix::identity(1, 1), WeightScheme::Custom).unwrap()
}

fn circulant(n: usize, r: usize) -> ConsensusMatrix {
    ConsensusMatrix::from_topology(&Topology::circulant(n, r).unwrap(), WeightScheme::LazyMetropolis).unwrap()
}

#[test]
fn single_agent_reduces_to_gradient_descent() {
    let reg = make_regression(6, 1, 4, 9).unwrap();
    let h = reg.blocks()[0].clone();
    let y = reg.targets()[0].clone();
    let mu = 0.5 / reg.smoothness();
    let x0 = rng::uniform_vector(&mut rng::stream(9, Stream::Init), 6, -1.0, 1.0);
    let init = Init::Blocks(DMatrix::from_row_slice(1, 6, x0.as_slice()));
    let traj = run(&reg, &single_agent(), &Schedule::Identity, mu, 1000, &init).unwrap();

    let mut x = x0;
    for _ in 0..1000 {
        let g = &h * (h.tr_mul(&x) - &y) * 2.0;
        x -= g * mu;
    }
    let got = traj.final_state.unwrap().block(0);
    assert!((got - &x).norm() <= 1e-12 * (1.0 + x.norm()));
    assert!(traj.records.iter().all(|r| r.b == 0.0));
}

#[test]
fn zero_step_on_complete_graph_is_one_shot_average() {
    let reg = make_regression(4, 5, 2, 1).unwrap();
    let w = ConsensusMatrix::from_topology(&Topology::complete(5).unwrap(), WeightScheme::UniformNeighbor).unwrap();
    let s0 = StackedState::uniform(5, 4, 3);
    let s1 = near_dgd_step(&s0, &w, &Schedule::Constant { j: 1 }, 0.0, &reg).unwrap();
    let avg = s0.average();
    for i in 0..5 {
        assert!((s1.block(i) - &avg).norm() <= 1e-14);
    }
    assert_eq!((s1.k, s1.comm_rounds, s1.grad_rounds), (1, 1, 1));
}

#[test]
fn averaged_recursion_tracks_block_average() {
    let reg = make_regression(10, 8, 3, 2).unwrap();
    let w = circulant(8, 2);
    let mu = 0.9 / reg.smoothness();
    let mut s = StackedState::uniform(8, 10, 2);
    for k in 0..50 {
        let expected = averaged_step(&s.average(), mu, &reg, &s.x);
        s = near_dgd_step(&s, &w, &Schedule::case(3).unwrap(), mu, &reg).unwrap();
        assert!(
            (s.average() - &expected).norm() <= 1e-12 * (1.0 + expected.norm()),
            "k = {k}"
        );
    }
}

#[test]
fn zero_iterations_give_empty_trajectory() {
    let q = make_piecewise_quartic(4, 0).unwrap();
    let traj = run(
        &q,
        &circulant(4, 1),
        &Schedule::Identity,
        0.1,
        0,
        &Init::Uniform { seed: 0 },
    )
    .unwrap();
    assert!(traj.is_empty());
    assert!(traj.final_state.is_none());
    assert!(cost(&traj, &CostWeights::new(1.0, 1.0)).unwrap().is_empty());
}

#[test]
fn cost_of_constant_schedule() {
    let q = make_piecewise_quartic(4, 0).unwrap();
    let traj = run(
        &q,
        &circulant(4, 1),
        &Schedule::Constant { j: 3 },
        0.1,
        10,
        &Init::Uniform { seed: 0 },
    )
    .unwrap();
    assert_eq!(traj.len(), 11);
    let c = cost(&traj, &CostWeights::new(0.2, 1.0)).unwrap();
    for (k, v) in c.iter().enumerate() {
        assert!((v - 1.6 * k as f64).abs() <= 1e-12);
    }
    let per_agent = cost(&traj, &CostWeights::new(0.2, 1.0).per_agent(true)).unwrap();
    assert!((per_agent[10] - 4.0 * 16.0).abs() <= 1e-12);
}

#[test]
fn cost_of_identity_schedule() {
    let q = make_piecewise_quartic(4, 0).unwrap();
    let traj = run(
        &q,
        &circulant(4, 1),
        &Schedule::Identity,
        0.1,
        30,
        &Init::Uniform { seed: 0 },
    )
    .unwrap();
    let c = cost(&traj, &CostWeights::new(1.0, 0.5)).unwrap();
    for (k, v) in c.iter().enumerate() {
        let k = k as f64;
        assert_eq!(*v, k * (k + 1.0) / 2.0 + 0.5 * k);
    }
}

#[test]
fn negative_cost_weights_rejected() {
    assert!(CostWeights::new(-1.0, 1.0).validate().is_err());
    assert!(CostWeights::new(1.0, f64::NAN).validate().is_err());
    assert_eq!(CostWeights::new(0.2, 1.0).slug(), "cg1-cc0.2");
}

#[test]
fn oversized_step_trips_divergence_guard() {
    let reg = make_regression(5, 4, 3, 0).unwrap();
    let mu = 50.0 / reg.smoothness();
    let err = run(
        &reg,
        &circulant(4, 1),
        &Schedule::Constant { j: 1 },
        mu,
        10_000,
        &Init::Uniform { seed: 0 },
    );
    assert!(matches!(err, Err(Error::Diverged { .. })), "{err:?}");
}

/// Local gradients blow up once any coordinate passes a threshold.
struct Cliff;

impl Problem for Cliff {
    fn agents(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        1
    }
    fn local_value(&self, _: usize, x: &DVector<f64>) -> f64 {
        x[0] * x[0]
    }
    fn local_grad(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        if i == 1 && x[0] < -0.5 {
            DVector::from_element(1, f64::NAN)
        } else {
            x * 2.0
        }
    }
    fn local_smoothness(&self, _: usize) -> f64 {
        2.0
    }
    fn kind(&self) -> ProblemKind {
        ProblemKind::Custom
    }
    fn optimal_value(&self) -> f64 {
        0.0
    }
    fn project(&self, _: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(1)
    }
    fn composite(&self) -> Option<&CompositeStructure> {
        None
    }
}

#[test]
fn non_finite_gradient_reports_iterate() {
    let w = ConsensusMatrix::new(DMatrix::from_element(2, 2, 0.5), WeightScheme::Custom).unwrap();
    let init = Init::Blocks(DMatrix::from_row_slice(2, 1, &[0.25, -0.75]));
    match run(&Cliff, &w, &Schedule::Identity, 0.1, 5, &init) {
        Err(Error::NonFiniteGradient { k, agent, iterate }) => {
            assert_eq!((k, agent), (0, 1));
            assert_eq!(iterate, vec![-0.75]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_inputs_rejected() {
    let q = make_piecewise_quartic(4, 0).unwrap();
    let w = circulant(4, 1);
    let init = Init::Uniform { seed: 0 };
    assert!(run(&q, &w, &Schedule::Constant { j: 0 }, 0.1, 3, &init).is_err());
    assert!(run(&q, &w, &Schedule::Identity, -0.1, 3, &init).is_err());
    assert!(run(&q, &circulant(5, 1), &Schedule::Identity, 0.1, 3, &init).is_err());
    let opts = RunOptions {
        reference: MetricReference::Point(DVector::zeros(2)),
    };
    assert!(run_with(&q, &w, &Schedule::Identity, 0.1, 3, &init, &opts).is_err());
}

#[test]
fn schedule_formulas() {
    let log1 = Schedule::LogFloor { q: 1.0 };
    assert_eq!(log1.rounds(0), 1);
    assert_eq!(log1.rounds(1), 1);
    assert_eq!(log1.rounds(2), 2);
    assert_eq!(log1.rounds(6), 2);
    assert_eq!(log1.rounds(7), 3);
    let lin = Schedule::LinearFloor { m: 100 };
    assert_eq!(
        (lin.rounds(0), lin.rounds(99), lin.rounds(100), lin.rounds(250)),
        (1, 1, 2, 3)
    );
    assert_eq!(Schedule::Identity.rounds(41), 42);
    assert_eq!(Schedule::Constant { j: 4 }.rounds(1000), 4);
    assert_eq!(Schedule::cases().len(), 5);
    assert!(Schedule::case(0).is_none() && Schedule::case(6).is_none());
    assert!(Schedule::LogFloor { q: -1.0 }.validate().is_err());
    assert!(Schedule::LinearFloor { m: 0 }.validate().is_err());
}

#[test]
fn summability_heuristic() {
    assert!(Schedule::Identity.looks_summable(0.5, 1000));
    assert!(Schedule::LinearFloor { m: 10 }.looks_summable(0.5, 1000));
    assert!(!Schedule::Constant { j: 2 }.looks_summable(0.5, 1000));
    assert!(!Schedule::LogFloor { q: 0.5 }.looks_summable(0.5, 1000));
}

#[test]
fn full_rank_instance_converges_to_minimiser() {
    let reg = make_regression(3, 4, 3, 0).unwrap();
    assert!(!reg.is_rank_deficient());
    let traj = run(
        &reg,
        &circulant(4, 1),
        &Schedule::Identity,
        1.0 / reg.smoothness(),
        3000,
        &Init::Uniform { seed: 0 },
    )
    .unwrap();
    let last = traj.last().unwrap();
    assert!(last.a <= 1e-8 && last.b <= 1e-8, "{last:?}");
    let final_state = traj.final_state.unwrap();
    for i in 0..4 {
        assert!((final_state.block(i) - reg.structure().x_hat()).norm() <= 1e-8);
    }
}

#[test]
fn cached_powers_agree_with_stepwise_mixing() {
    let reg = make_regression(12, 8, 2, 5).unwrap();
    let w = circulant(8, 3);
    let mu = 0.5 / reg.smoothness();
    let traj = run(&reg, &w, &Schedule::Identity, mu, 80, &Init::Uniform { seed: 5 }).unwrap();
    let mut s = Init::Uniform { seed: 5 }.state(8, 12).unwrap();
    for _ in 0..80 {
        s = near_dgd_step(&s, &w, &Schedule::Identity, mu, &reg).unwrap();
    }
    let fin = traj.final_state.clone().unwrap();
    assert!((&fin.x - &s.x).norm() <= 1e-10 * (1.0 + s.x.norm()));
    assert_eq!((fin.comm_rounds, fin.grad_rounds), (s.comm_rounds, s.grad_rounds));
    assert!(!traj.drift_flagged());
}

#[test]
fn cached_powers_agree_when_agents_outnumber_dimensions() {
    let q = make_piecewise_quartic(8, 2).unwrap();
    let w = circulant(8, 1);
    for sched in [
        Schedule::Identity,
        Schedule::LinearFloor { m: 3 },
        Schedule::case(3).unwrap(),
    ] {
        let traj = run(&q, &w, &sched, 0.3, 150, &Init::Uniform { seed: 2 }).unwrap();
        let mut s = Init::Uniform { seed: 2 }.state(8, 1).unwrap();
        for _ in 0..150 {
            s = near_dgd_step(&s, &w, &sched, 0.3, &q).unwrap();
        }
        let fin = traj.final_state.unwrap();
        assert!((&fin.x - &s.x).norm() <= 1e-12, "{sched}");
    }
}

#[test]
fn metrics_use_projection_and_consensus_error() {
    let reg = make_regression(10, 4, 2, 3).unwrap();
    let w = circulant(4, 1);
    let s0 = Init::Uniform { seed: 3 }.state(4, 10).unwrap();
    let traj = run(
        &reg,
        &w,
        &Schedule::Constant { j: 1 },
        0.01,
        1,
        &Init::Uniform { seed: 3 },
    )
    .unwrap();
    let r0 = traj.first().unwrap();
    let avg = s0.average();
    let a = 2.0 * (&avg - reg.project(&avg)).norm();
    let mut b = 0.0;
    for i in 0..4 {
        b += (s0.block(i) - &avg).norm_squared();
    }
    assert!((r0.a - a).abs() <= 1e-12 * (1.0 + a));
    assert!((r0.b - b.sqrt()).abs() <= 1e-12);
    let regret: f64 = (0..4)
        .map(|i| reg.value(&s0.block(i)) - reg.optimal_value())
        .sum::<f64>()
        / 4.0;
    assert!((r0.regret - regret).abs() <= 1e-12 * (1.0 + regret.abs()));
    assert!((r0.ergodic_gap - (reg.value(&avg) - reg.optimal_value())).abs() <= 1e-12);
}

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    prop_oneof![
        (1u32..5).prop_map(|j| Schedule::Constant { j }),
        (0.0f64..3.0).prop_map(|q| Schedule::LogFloor { q }),
        (1u32..20).prop_map(|m| Schedule::LinearFloor { m }),
        Just(Schedule::Identity),
    ]
}

fn random_instance(seed: u64) -> (Regression, ConsensusMatrix) {
    let n = 2 + (seed % 7) as usize;
    let reg = make_regression(4 + (seed % 5) as usize, n, 1 + (seed % 3) as usize, seed).unwrap();
    let topo = Topology::random_connected(n, 0.3, &mut rng::stream(seed, Stream::Verify)).unwrap();
    (
        reg,
        ConsensusMatrix::from_topology(&topo, WeightScheme::LazyMetropolis).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counters_follow_schedule(seed in 0u64..1000, sched in schedule_strategy(), k in 1usize..60) {
        let (reg, w) = random_instance(seed);
        let traj = run(&reg, &w, &sched, 0.1 / reg.smoothness(), k, &Init::Uniform { seed }).unwrap();
        let mut comm = 0u64;
        for (i, r) in traj.records.iter().enumerate() {
            prop_assert_eq!(r.k, i);
            prop_assert_eq!(r.cum_grad, i as u64);
            prop_assert_eq!(r.cum_comm, comm);
            prop_assert_eq!(r.t_k, sched.rounds(i));
            comm += sched.rounds(i) as u64;
        }
    }

    #[test]
    fn recursive_inequalities_hold(seed in 0u64..1000, sched in schedule_strategy(), frac in 0.05f64..1.0) {
        let (reg, w) = random_instance(seed);
        let d = constant_d(&reg, reg.structure()).unwrap();
        let mu = frac * 2.0 / reg.smoothness();
        let traj = run(&reg, &w, &sched, mu, 60, &Init::Uniform { seed }).unwrap();
        let params = MonitorParams { mu, l_max: reg.smoothness(), beta: w.beta(), d };
        let convex = monitor(&traj, InequalitySystem::Convex, &params);
        prop_assert!(convex.passed(), "{:?}", convex);
        let c = TheoryConstants::new(reg.structure(), reg.smoothness());
        if mu <= c.cap_composite() {
            let comp = monitor(&traj, InequalitySystem::Composite { q: c.q(mu) }, &params);
            prop_assert!(comp.passed(), "{:?}", comp);
        }
    }

    #[test]
    fn block_average_matches_averaged_recursion(seed in 0u64..1000, sched in schedule_strategy()) {
        let (reg, w) = random_instance(seed);
        let traj = run(&reg, &w, &sched, 1.0 / reg.smoothness(), 40, &Init::Uniform { seed }).unwrap();
        prop_assert!(traj.max_average_drift <= 1e-10);
    }
}
