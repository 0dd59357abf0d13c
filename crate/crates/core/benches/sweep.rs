use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use neardgd::harness::{preset_piecewise, preset_regression, run_case, ExperimentConfig, Instance};
use neardgd::par::Execution;

fn sweep(cfg: &ExperimentConfig, inst: &Instance, exec: Execution) -> usize {
    exec.map(&cfg.schedules, |s| {
        run_case(cfg, inst, s).expect("preset cases run").trajectory.len()
    })
    .into_iter()
    .sum()
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (mut cfg, iterations) in [(preset_regression(), 1000), (preset_piecewise(), 4000)] {
        cfg.iterations = iterations;
        let inst = Instance::build(&cfg).expect("preset builds");
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(label, &cfg.name), &cfg, |b, cfg| {
                b.iter(|| black_box(sweep(cfg, &inst, exec)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
