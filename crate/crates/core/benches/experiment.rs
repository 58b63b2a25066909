use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use zne_core::harness::simulate;
use zne_core::noise::NoiseProfile;
use zne_core::sim::{self, GateNoise};
use zne_core::{Benchmark, ExperimentConfig, FilterKind, Method, Parallelism};

fn config(parallelism: Parallelism) -> ExperimentConfig {
    let b = Benchmark::Grover.build();
    let noise = NoiseProfile::default().build(&b.circuit, &b.layout, 1).unwrap();
    let mut cfg = ExperimentConfig::new(Benchmark::Grover, noise, 1);
    cfg.runs = 16;
    cfg.methods = vec![Method::Szne, Method::AsfB, Method::IcZne];
    cfg.filters = vec![FilterKind::None];
    cfg.parallelism = parallelism;
    cfg
}

/// Whole-experiment simulation on the calling thread vs the rayon pool.
fn experiment(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_grover_16_runs");
    g.sample_size(10);
    for mode in [Parallelism::Sequential, Parallelism::Parallel] {
        let cfg = config(mode);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}").to_lowercase()), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

/// Gate fusion against gate-by-gate evolution.
fn evolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    let noise = GateNoise::uniform(0.01);
    for bench in [Benchmark::Hhl, Benchmark::Ladder] {
        let circuit = bench.build().circuit;
        g.bench_with_input(BenchmarkId::new("fused", bench), &circuit, |b, c| b.iter(|| sim::evolve(black_box(c), &noise).unwrap()));
        g.bench_with_input(BenchmarkId::new("unfused", bench), &circuit, |b, c| {
            b.iter(|| sim::evolve_unfused(black_box(c), &noise).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, experiment, evolution);
criterion_main!(benches);
