use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbbm::bbm::{self, SimParams};
use gbbm::speed;
use gbbm::verify::{cosine_field, laminate_field};
use gbbm::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn replicas(c: &mut Criterion) {
    let g = cosine_field();
    let params = SimParams::new(0.01, 100_000).unwrap();
    let mut group = c.benchmark_group("bbm_replicas");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| bbm::simulate_replicas(&g, &[0.0], &[4.0], params, 64, black_box(7), exec).unwrap())
        });
    }
    group.finish();
}

fn speed_profile(c: &mut Criterion) {
    let g = laminate_field();
    let mut group = c.benchmark_group("speed_profile");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| speed::speed_profile(black_box(&g), 32, exec).unwrap())
        });
    }
    group.finish();
}

fn branching_tail(c: &mut Criterion) {
    let g = cosine_field();
    let grid = [1.0, 2.0, 3.0];
    let mut group = c.benchmark_group("branching_tail");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| bbm::branching_time_tail(&g, &[0.0], &grid, 10_000, 0.01, black_box(3), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, replicas, speed_profile, branching_tail);
criterion_main!(benches);
