use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use forcebal::bandit::BanditInstance;
use forcebal::harness::{run_seeds, CheckpointSpec, Experiment};
use forcebal::solver::pareto_sweep;
use forcebal::{Execution, PolicyKind, TradeoffParams};

fn five_arms() -> BanditInstance {
    BanditInstance::gaussian(&[1.0, 1.5, 2.0, 4.0, 5.0], &[0.05, 0.1, 0.2, 4.0, 0.5]).unwrap()
}

fn batches(c: &mut Criterion) {
    let params = TradeoffParams::new(0.9, 0.0, 1.0, 0.05).unwrap();
    let exp = Experiment::new(five_arms(), params, 2000)
        .unwrap()
        .with_checkpoints(CheckpointSpec::Geometric { points: 20 });
    let seeds = run_seeds(0, 32);
    let mut group = c.benchmark_group("episode_batch");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{execution:?}")),
            &execution,
            |b, &e| b.iter(|| black_box(exp.run_batch(PolicyKind::ForcingBalance, &seeds, e).unwrap())),
        );
    }
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let m = five_arms().moments();
    let ws: Vec<f64> = (0..200).map(|i| i as f64 * 0.005).collect();
    let mut group = c.benchmark_group("pareto_sweep");
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{execution:?}")),
            &execution,
            |b, &e| b.iter(|| black_box(pareto_sweep(&m, &ws, 0.0, e).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, batches, sweeps);
criterion_main!(benches);
