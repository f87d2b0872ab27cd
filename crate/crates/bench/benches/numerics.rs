use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kgamma_core::analysis::{h2_norm_squared, hinf_norm};
use kgamma_core::model::ClosedLoop;
use kgamma_core::numerics::{polar_decompose, solve_care, solve_lyapunov, Mat, SymMatrix, Tolerances};
use std::hint::black_box;

/// Deterministic stable system with tridiagonal `A`.
fn system(n: usize) -> ClosedLoop {
    let a = Mat::from_fn(n, n, |i, j| match i as isize - j as isize {
        0 => -1.0 - 0.1 * i as f64,
        1 => 0.7,
        -1 => -0.4,
        _ => 0.0,
    });
    let b = Mat::from_fn(n, 2, |i, j| ((i + 2 * j) as f64 * 0.37).sin());
    let c = Mat::from_fn(2, n, |i, j| ((3 * i + j) as f64 * 0.23).cos());
    ClosedLoop::from_parts(a, b, c, Mat::zeros(2, 2)).unwrap()
}

fn lyapunov(c: &mut Criterion) {
    let mut g = c.benchmark_group("lyapunov");
    for n in [4, 8, 16, 32] {
        let sys = system(n);
        let q = SymMatrix::identity(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_lyapunov(black_box(&sys.a), &q, 1e-12).unwrap())
        });
    }
    g.finish();
}

fn riccati(c: &mut Criterion) {
    let mut g = c.benchmark_group("care");
    for n in [4, 8, 16] {
        let sys = system(n);
        let a = -sys.a.clone();
        let input = Mat::from_fn(n, n, |i, j| f64::from(i == j) + 0.1 * ((i + j) as f64).sin());
        let (q, r) = (SymMatrix::identity(n), SymMatrix::identity(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_care(black_box(&a), &input, &q, &r, 1e-9).unwrap())
        });
    }
    g.finish();
}

fn norms(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut g = c.benchmark_group("norms");
    for n in [4, 8, 16] {
        let sys = system(n);
        g.bench_with_input(BenchmarkId::new("hinf", n), &n, |b, _| b.iter(|| hinf_norm(black_box(&sys), &tol).unwrap()));
        g.bench_with_input(BenchmarkId::new("h2", n), &n, |b, _| {
            b.iter(|| h2_norm_squared(black_box(&sys), &tol).unwrap())
        });
    }
    g.finish();
}

fn polar(c: &mut Criterion) {
    let m = Mat::from_fn(8, 8, |i, j| ((i * 8 + j) as f64 * 0.61).sin() + if i == j { 3.0 } else { 0.0 });
    c.bench_function("polar_8", |b| b.iter(|| polar_decompose(black_box(&m), 1e-12).unwrap()));
}

criterion_group!(benches, lyapunov, riccati, norms, polar);
criterion_main!(benches);
