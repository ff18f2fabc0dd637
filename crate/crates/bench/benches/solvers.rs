use std::hint::black_box;

use cavity_core::greens::compute_v_trace;
use cavity_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn config(theta: f64) -> ReservoirConfig {
    ReservoirConfig::new(SpectralDensity::new(0.4, 1.0, 1.0).unwrap(), theta).unwrap()
}

fn bench_solve_u(c: &mut Criterion) {
    let sd = SpectralDensity::new(0.4, 1.0, 1.0).unwrap();
    let mut group = c.benchmark_group("solve_u");
    group.sample_size(10);
    for steps in [1000usize, 4000] {
        let grid = TimeGrid::new(steps as f64 * 0.01, steps).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &grid, |b, grid| {
            b.iter(|| solve_u(black_box(&sd), grid).unwrap())
        });
    }
    group.finish();
}

fn bench_kernel_table(c: &mut Criterion) {
    let cfg = config(12.5);
    let mut group = c.benchmark_group("kernel_table");
    group.sample_size(10);
    for len in [250usize, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, &len| {
            b.iter(|| KernelTable::build(black_box(&cfg), 0.01, len).unwrap())
        });
    }
    group.finish();
}

fn bench_v(c: &mut Criterion) {
    let cfg = config(12.5);
    let steps = 2000;
    let grid = TimeGrid::new(20.0, steps).unwrap();
    let u = solve_u(&cfg.spectral, &grid).unwrap();
    let table = KernelTable::build(&cfg, grid.dt(), steps + 1).unwrap();
    let mut group = c.benchmark_group("v");
    group.sample_size(10);
    group.bench_function("single_time", |b| {
        b.iter(|| compute_v(black_box(&table), u.u(), steps).unwrap())
    });
    group.bench_function("trace_stride_20", |b| {
        b.iter(|| compute_v_trace(black_box(&table), u.u(), 20).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_solve_u, bench_kernel_table, bench_v);
criterion_main!(benches);
