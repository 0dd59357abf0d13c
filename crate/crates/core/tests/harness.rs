use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use neardgd::dynamics::{CostWeights, Schedule};
use neardgd::error::Error;
use neardgd::harness::{
    inspect, preset, preset_piecewise, preset_regression, run_experiment, run_experiment_with, verify,
    ExperimentConfig, GraphSpec, MetricSpec, ProblemSpec, StepRule,
};
use neardgd::net::WeightScheme;
use neardgd::par::Execution;
use neardgd::problems::ChConvention;
use neardgd::theory::BoundForm;
use proptest::prelude::*;

fn short(mut cfg: ExperimentConfig, dir: &Path, iterations: usize) -> ExperimentConfig {
    cfg.output = dir.to_path_buf();
    cfg.iterations = iterations;
    cfg
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

#[test]
fn shipped_configs_match_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    assert_eq!(
        ExperimentConfig::load(&root.join("regression.toml")).unwrap(),
        preset_regression()
    );
    assert_eq!(
        ExperimentConfig::load(&root.join("piecewise.toml")).unwrap(),
        preset_piecewise()
    );
    assert!(preset("nope").is_err());
}

#[test]
fn seeds_beyond_toml_integer_range_rejected_on_save() {
    let mut cfg = preset_piecewise();
    cfg.problem.set_seed(u64::MAX);
    assert!(matches!(cfg.to_toml(), Err(Error::Config(_))));
    cfg.problem.set_seed(i64::MAX as u64);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
}

#[test]
fn unknown_keys_rejected() {
    let text = preset_regression().to_toml().unwrap();
    let top = text.replacen("iterations", "iteration_count", 1);
    assert!(matches!(ExperimentConfig::from_toml(&top), Err(Error::Config(_))));
    let nested = text.replacen("radius = 3", "radius = 3\ndegree = 6", 1);
    assert!(matches!(ExperimentConfig::from_toml(&nested), Err(Error::Config(_))));
}

#[test]
fn empty_schedule_list_reports_no_cases() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(preset_piecewise(), dir.path(), 10);
    cfg.schedules.clear();
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.to_string().contains("no cases"), "{err}");
}

#[test]
fn config_validation() {
    let mut cfg = preset_piecewise();
    cfg.step = StepRule::CompositeCap { factor: 0.5 };
    assert!(cfg.validate().is_err());
    let mut cfg = preset_regression();
    cfg.metric = MetricSpec::Point(vec![0.0; 3]);
    assert!(cfg.validate().is_err());
    let mut cfg = preset_regression();
    cfg.step = StepRule::Fixed { mu: 0.0 };
    assert!(cfg.validate().is_err());
    let mut cfg = preset_regression();
    cfg.costs.push(CostWeights::new(-1.0, 1.0));
    assert!(cfg.validate().is_err());
    let mut cfg = preset_regression();
    assert!(cfg.select_case(6).is_err());
    cfg.select_case(5).unwrap();
    assert_eq!(cfg.schedules, vec![Schedule::Identity]);
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&short(preset_regression(), a.path(), 300)).unwrap();
    run_experiment(&short(preset_regression(), b.path(), 300)).unwrap();
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    assert_eq!(fa.len(), 16);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment_with(&short(preset_piecewise(), a.path(), 400), Execution::Sequential).unwrap();
    run_experiment_with(&short(preset_piecewise(), b.path(), 400), Execution::Parallel).unwrap();
    for (x, y) in csv_files(a.path()).iter().zip(&csv_files(b.path())) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn different_seed_changes_iterates() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = short(preset_piecewise(), a.path(), 50);
    cfg.select_case(1).unwrap();
    run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.problem.set_seed(1);
    run_experiment(&cfg).unwrap();
    let name = "piecewise_log-0.5_cg1-cc0.2.csv";
    assert_ne!(
        fs::read(a.path().join(name)).unwrap(),
        fs::read(b.path().join(name)).unwrap()
    );
}

#[test]
fn cost_weights_touch_only_cost_column() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = short(preset_regression(), a.path(), 200);
    cfg.select_case(2).unwrap();
    cfg.costs = vec![CostWeights::new(0.2, 1.0)];
    let sa = run_experiment(&cfg).unwrap();
    cfg.output = b.path().to_path_buf();
    cfg.costs = vec![CostWeights::new(3.0, 0.7)];
    let sb = run_experiment(&cfg).unwrap();
    let (ra, rb) = (read_csv(sa.files()[0]), read_csv(sb.files()[0]));
    let cost_col = ra[0].iter().position(|h| h == "cum_cost").unwrap();
    assert_eq!(ra.len(), rb.len());
    let mut differs = false;
    for (x, y) in ra.iter().zip(&rb).skip(1) {
        for (c, (u, v)) in x.iter().zip(y).enumerate() {
            if c == cost_col {
                differs |= u != v;
            } else {
                assert_eq!(u, v);
            }
        }
    }
    assert!(differs);
}

#[test]
fn regression_preset_writes_every_combination_with_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&short(preset_regression(), dir.path(), 300)).unwrap();
    assert!(summary.monitors_passed(), "{summary}");
    assert_eq!(summary.rows.len(), 15);
    assert!(summary.summary_path.exists());
    for sched in Schedule::cases() {
        for w in &preset_regression().costs {
            let path = dir.path().join(format!("regression_{}_{}.csv", sched.slug(), w.slug()));
            let rows = read_csv(&path);
            assert_eq!(
                rows[0],
                [
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
                    "bound_eq_5_40"
                ]
            );
            assert_eq!(rows.len(), 302);
            for (i, row) in rows.iter().enumerate().skip(1) {
                assert_eq!(row[9], "", "no fixed-schedule bound for {sched}");
                assert_eq!(row[10].is_empty(), i - 1 < 3, "{sched} k={}", i - 1);
            }
            let costs: Vec<f64> = rows[1..].iter().map(|r| r[8].parse().unwrap()).collect();
            assert!(costs.windows(2).all(|c| c[1] > c[0]));
        }
    }
    let names: Vec<_> = summary.cases[0].monitors.iter().map(|m| m.name).collect();
    assert_eq!(names, ["eq-3-50", "eq-4-1", "bound-eq-5-40"]);
}

#[test]
fn constant_schedule_populates_fixed_bound_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(preset_regression(), dir.path(), 100);
    cfg.schedules = vec![Schedule::Constant { j: 2 }];
    cfg.costs.truncate(1);
    let summary = run_experiment(&cfg).unwrap();
    assert!(summary.monitors_passed(), "{summary}");
    let rows = read_csv(summary.files()[0]);
    assert!(rows[1..].iter().all(|r| !r[9].is_empty()));
    let names: Vec<_> = summary.cases[0].monitors.iter().map(|m| m.name).collect();
    assert_eq!(names, ["eq-3-50", "eq-4-1", "bound-eq-5-24", "bound-eq-5-40"]);
}

#[test]
fn paper_step_on_regression_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(preset_regression(), dir.path(), 10);
    cfg.step = StepRule::Fixed { mu: 0.1 };
    assert!(matches!(run_experiment(&cfg), Err(Error::Inadmissible { .. })));
    let report = inspect(&cfg).unwrap();
    assert!(report.schedules.iter().all(|s| s.caps.unwrap().composite < 0.1));
    assert!(report.composite.unwrap().rank < 50);
}

#[test]
fn piecewise_preset_warns_and_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&short(preset_piecewise(), dir.path(), 200)).unwrap();
    assert_eq!(summary.warnings.len(), 5);
    assert!(
        summary.warnings.iter().all(|w| w.contains("exceeds 1/L")),
        "{:?}",
        summary.warnings
    );
    assert!(summary.monitors_passed());
    let first = summary.cases[0].trajectory.first().unwrap();
    assert!(first.regret > 0.0);
}

#[test]
fn inspect_reports_constants() {
    let report = inspect(&preset_regression()).unwrap();
    assert!((report.beta - 1.0 / 7.0).abs() <= 1e-12);
    assert_eq!(report.schedules.len(), 5);
    let comp = report.composite.unwrap();
    assert_eq!((comp.rank, comp.dim), (40, 50));
    assert!(report.d <= 1e-9);
    let text = report.to_string();
    for key in ["beta", "c_H", "C_H", "C_2", "gamma", "R"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    let pw = inspect(&preset_piecewise()).unwrap();
    assert!(pw.composite.is_none());
    assert_eq!(pw.l, 3.0);
}

#[test]
fn verification_battery_passes() {
    for seed in [0, 1, 42] {
        let report = verify(seed);
        assert!(report.all_passed(), "{report}");
        assert_eq!(report.rows.len(), 11);
    }
}

#[test]
fn cli_smoke() {
    let bin = env!("CARGO_BIN_EXE_neardgd");
    let dir = tempfile::tempdir().unwrap();
    let run = Command::new(bin)
        .args([
            "run",
            "--preset",
            "piecewise",
            "--case",
            "3",
            "--iterations",
            "100",
            "--sequential",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(csv_files(dir.path()).len(), 4);

    let bad = Command::new(bin)
        .args(["run", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let v = Command::new(bin).args(["verify", "--seed", "3"]).output().unwrap();
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains("PASS"));

    let i = Command::new(bin)
        .args(["inspect", "--preset", "regression"])
        .output()
        .unwrap();
    assert!(i.status.success());
}

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    prop_oneof![
        (1u32..10).prop_map(|j| Schedule::Constant { j }),
        (0.0f64..5.0).prop_map(|q| Schedule::LogFloor { q }),
        (1u32..500).prop_map(|m| Schedule::LinearFloor { m }),
        Just(Schedule::Identity),
    ]
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    let problem =
        prop_oneof![
            (1usize..60, 1usize..12, 1usize..8, 0..=i64::MAX as u64)
                .prop_map(|(p, n, s, seed)| ProblemSpec::Regression { p, n, s, seed }),
            (2usize..12, 0..=i64::MAX as u64).prop_map(|(n, seed)| ProblemSpec::PiecewiseQuartic { n, seed }),
        ];
    let weights = prop_oneof![Just(WeightScheme::LazyMetropolis), Just(WeightScheme::UniformNeighbor)];
    let graph = prop_oneof![
        (1usize..4, weights.clone()).prop_map(|(radius, weights)| GraphSpec::Circulant { radius, weights }),
        weights.prop_map(|weights| GraphSpec::Complete { weights }),
    ];
    let step = prop_oneof![
        (1e-6f64..1.0).prop_map(|mu| StepRule::Fixed { mu }),
        (0.01f64..1.0).prop_map(|factor| StepRule::InverseL { factor }),
    ];
    let costs = prop::collection::vec(
        (0.0f64..5.0, 0.0f64..5.0, any::<bool>()).prop_map(|(c, g, a)| CostWeights::new(c, g).per_agent(a)),
        1..4,
    );
    (
        "[a-z][a-z0-9_-]{0,12}",
        0usize..100_000,
        problem,
        graph,
        step,
        prop::collection::vec(schedule_strategy(), 1..6),
        costs,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(
            |(name, iterations, problem, graph, step, schedules, costs, inad, ch, form)| ExperimentConfig {
                output: PathBuf::from("out").join(&name),
                name,
                iterations,
                metric: MetricSpec::Projection,
                allow_inadmissible: inad,
                ch_convention: if ch {
                    ChConvention::InverseNorm
                } else {
                    ChConvention::InverseNormSquared
                },
                bound_form: if form { BoundForm::Derived } else { BoundForm::AsStated },
                problem,
                graph,
                step,
                schedules,
                costs,
            },
        )
}

proptest! {
    #[test]
    fn config_round_trips(cfg in config_strategy()) {
        let text = cfg.to_toml().unwrap();
        prop_assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
