use std::hint::black_box;

use bullwhip_core::engine::GameConfig;
use bullwhip_core::experiments::{run_sweep, sigma_grid, AgentKind, SweepConfig};
use bullwhip_core::optimize::{minimize_box, OptProblem};
use bullwhip_core::par::Execution;
use bullwhip_core::policies::StermanParams;
use bullwhip_core::rl::{evaluate, train, EnvConfig, TrainConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let mut config = SweepConfig::new(vec![StermanParams::GENERAL], 1);
    config.sigma_grid = sigma_grid(15.0, 1.5);
    config.reps_per_cell = 20;
    config.positions = vec![1, 2];
    config.kinds = vec![AgentKind::ModelBased];
    for p in [1, 2] {
        config.model_based.insert(p, StermanParams::GENERAL);
    }
    let mut group = c.benchmark_group("sweep");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_sweep(black_box(&config), exec).unwrap())
        });
    }
    group.finish();
}

fn multistart(c: &mut Criterion) {
    let problem = OptProblem::new(2, StermanParams::GENERAL, GameConfig::default()).unwrap();
    let mut group = c.benchmark_group("multistart");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| minimize_box(black_box(&problem), 8, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let env = EnvConfig::default();
    let tc = TrainConfig {
        total_env_steps: 0,
        ..TrainConfig::default()
    };
    let net = train(&env, &tc).unwrap().net;
    let mut group = c.benchmark_group("evaluate");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| evaluate(black_box(&net), &env, 50, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, multistart, evaluation);
criterion_main!(benches);
