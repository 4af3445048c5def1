use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use zipflab_bench::{pareto_sample, small_balanced};
use zipflab_core::analytics::{solve_stationary, GridConfig};
use zipflab_core::births::{sample_births, DEFAULT_BIRTH_CAP};
use zipflab_core::gbm::{sample_path_maximum, simulate_path};
use zipflab_core::model::{derive_stream, DiffusionSpec, GibratParams};
use zipflab_core::sim::run;
use zipflab_core::tail::{hill, rank_size};

fn growth(c: &mut Criterion) {
    let spec = DiffusionSpec::GBM(GibratParams::new(0.0, 0.2));
    c.bench_function("gbm path 10k steps", |b| {
        let mut rng = derive_stream(1, 0, "bench");
        b.iter(|| simulate_path(1.0, &spec, 0.01, 10_000, &mut rng).unwrap())
    });
    let decaying = GibratParams::from_log_drift(-0.5, 1.0);
    c.bench_function("path maximum", |b| {
        let mut rng = derive_stream(2, 0, "bench");
        b.iter(|| sample_path_maximum(1.0, decaying, 0.5, 1e-3, &mut rng).unwrap())
    });
}

fn economy(c: &mut Criterion) {
    let config = small_balanced();
    let mut group = c.benchmark_group("economy");
    group.sample_size(10);
    group.bench_function("balanced, 500 steps", |b| {
        b.iter(|| run(black_box(&config)).unwrap())
    });
    group.bench_function("birth schedule", |b| {
        b.iter_batched(
            || derive_stream(3, 0, "bench"),
            |mut rng| sample_births(&config.birth, 1000.0, DEFAULT_BIRTH_CAP, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn analytics(c: &mut Criterion) {
    let config = small_balanced();
    let mut group = c.benchmark_group("solver");
    for n in [1024, 4096] {
        let grid = GridConfig {
            richardson_tol: None,
            ..GridConfig::new(n, 1e8)
        };
        group.bench_function(format!("stationary n={n}"), |b| {
            b.iter(|| {
                solve_stationary(&config.diffusion, &config.birth, &config.exit, &grid).unwrap()
            })
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let sample = pareto_sample(100_000, 1.0, 4);
    c.bench_function("hill n=1e5", |b| {
        b.iter(|| hill(black_box(&sample), 1000).unwrap())
    });
    c.bench_function("rank-size n=1e5", |b| {
        b.iter(|| rank_size(black_box(&sample), 1000).unwrap())
    });
}

criterion_group!(benches, growth, economy, analytics, estimators);
criterion_main!(benches);
