use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use salo_bench::quadratic_fixture;
use salo_core::hessian_fd::{fd_diag_central, fd_diag_forward};
use salo_core::optim::{adam_step, HyperParams, MomentState};
use salo_core::salo::salo_step;
use salo_core::{Objective, SaloHyper, SaloState};

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for dim in [10, 1000] {
        let (q, w) = quadratic_fixture(dim);
        let g = q.grad(&w).unwrap();
        let salo_state = SaloState::new(dim);
        let salo_hyper = SaloHyper::default();
        group.bench_with_input(BenchmarkId::new("salo", dim), &dim, |b, _| {
            b.iter(|| salo_step(black_box(&w), black_box(&g), &salo_state, &salo_hyper).unwrap())
        });
        let adam_state = MomentState::new(dim);
        let adam_hyper = HyperParams::adam();
        group.bench_with_input(BenchmarkId::new("adam", dim), &dim, |b, _| {
            b.iter(|| adam_step(black_box(&w), black_box(&g), &adam_state, &adam_hyper).unwrap())
        });
    }
    group.finish();
}

fn fd_diag(c: &mut Criterion) {
    let mut group = c.benchmark_group("fd_diag");
    for dim in [10, 100] {
        let (q, w) = quadratic_fixture(dim);
        group.bench_with_input(BenchmarkId::new("forward", dim), &dim, |b, _| {
            b.iter(|| fd_diag_forward(&q, black_box(&w), 1e-4).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("central", dim), &dim, |b, _| {
            b.iter(|| fd_diag_central(&q, black_box(&w), 1e-4).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, steps, fd_diag);
criterion_main!(benches);
