use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rms_core::environment::{generate, ConeClasses, EnvSeedSpec, Measure, RowSource, Scheme};
use rms_core::estimators::{moment_curve, tau0_tail, Ensemble};
use rms_core::mass::MassSweep;
use rms_core::par::Execution;

fn cone_rows(c: &mut Criterion) {
    let mut g = c.benchmark_group("cone_rows");
    for horizon in [256usize, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(horizon), &horizon, |b, &h| {
            let spec = EnvSeedSpec::new(1, h, Measure::SizeBiased).scheme(Scheme::LightCone);
            b.iter(|| {
                let mut s = spec.stream(ConeClasses::Origin).unwrap();
                let mut cells = 0;
                while let Some(row) = s.next_row().unwrap() {
                    cells += row.len();
                }
                black_box(cells)
            })
        });
    }
    g.finish();
}

fn walker_generation(c: &mut Criterion) {
    c.bench_function("walkers/128", |b| {
        let spec = EnvSeedSpec::new(1, 128, Measure::SizeBiased);
        b.iter(|| black_box(generate(&spec).unwrap()))
    });
}

fn mass_sweep(c: &mut Criterion) {
    let env = generate(&EnvSeedSpec::new(2, 1024, Measure::SizeBiased).scheme(Scheme::LightCone)).unwrap();
    c.bench_function("mass_sweep/1024", |b| {
        b.iter(|| {
            let mut rows = env.source();
            let mut sweep = MassSweep::new();
            while let Some(row) = rows.next_row().unwrap() {
                sweep.advance(row).unwrap();
            }
            black_box(sweep.moments())
        })
    });
}

fn replicate_batches(c: &mut Criterion) {
    let mut g = c.benchmark_group("replicates");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        g.bench_function(BenchmarkId::new("moment_curve", &name), |b| {
            let e = Ensemble::new(3, 32).exec(exec);
            b.iter(|| black_box(moment_curve(&e, &[64, 256]).unwrap()))
        });
        g.bench_function(BenchmarkId::new("tau0_tail", &name), |b| {
            b.iter(|| black_box(tau0_tail(3, 200, 200, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, cone_rows, walker_generation, mass_sweep, replicate_batches);
criterion_main!(benches);
