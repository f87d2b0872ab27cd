use criterion::{criterion_group, criterion_main, Criterion};
use kgamma_core::homotopy::{connect, PathOptions};
use kgamma_core::liftmap::{lift, reconstruct};
use kgamma_core::lmi::synthesize;
use kgamma_core::scan::{scan, ScanSpec};
use kgamma_core::{Controller, Plant, Tolerances};
use std::hint::black_box;

fn lift_round_trip(c: &mut Criterion) {
    let tol = Tolerances::default();
    let plant = Plant::scalar_example(1.0);
    let k = Controller::scalar(0.0, 2.0, -2.0, -2.0);
    c.bench_function("lift_reconstruct", |b| {
        b.iter(|| {
            let z = lift(&plant, black_box(&k), 3.33, 0, &tol).unwrap();
            reconstruct(&plant, &z).unwrap()
        })
    });
}

fn synthesis(c: &mut Criterion) {
    let tol = Tolerances::default();
    let plant = Plant::scalar_example(1.0);
    let mut g = c.benchmark_group("synthesis");
    g.sample_size(10);
    g.bench_function("scalar_gamma_2", |b| b.iter(|| synthesize(black_box(&plant), 2.0, false, 0, &tol).unwrap()));
    g.finish();
}

fn path(c: &mut Criterion) {
    let tol = Tolerances::default();
    let plant = Plant::scalar_example(1.0);
    let k0 = Controller::scalar(0.0, 2.0, -2.0, -2.0);
    let k1 = Controller::scalar(0.0, 1.5, -3.0, -2.5);
    let opts = PathOptions::default();
    let mut g = c.benchmark_group("path");
    g.sample_size(10);
    g.bench_function("connect_100", |b| b.iter(|| connect(&plant, black_box(&k0), &k1, 3.33, &opts, &tol).unwrap()));
    g.finish();
}

fn grid(c: &mut Criterion) {
    let tol = Tolerances::default();
    let plant = Plant::scalar_example(1.0);
    let spec = ScanSpec::default_slice(50.0, 51).unwrap();
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    g.bench_function("slice_51x51", |b| b.iter(|| scan(&plant, black_box(&spec), &tol).unwrap()));
    g.finish();
}

criterion_group!(benches, lift_round_trip, synthesis, path, grid);
criterion_main!(benches);
