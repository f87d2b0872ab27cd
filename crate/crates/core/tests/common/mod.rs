#![allow(dead_code)]

use kgamma_core::analysis::hinf_norm;
use kgamma_core::model::{close_loop, similarity_transform, ClosedLoop, Controller, Plant};
use kgamma_core::numerics::{determinant, solve_care, Mat, SymMatrix, Tolerances};
use nalgebra::DMatrix;
type Complex64 = nalgebra::Complex<f64>;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        scale * v
    })
}

/// Random plant with the requested state size; input and output sizes in 1..=2.
/// `D11` is zero when `zero_d11`.
pub fn random_plant(rng: &mut ChaCha8Rng, n_x: usize, zero_d11: bool) -> Plant {
    let n_w = rng.random_range(1..=2);
    let n_u = rng.random_range(1..=2);
    let n_y = rng.random_range(1..=2);
    let n_z = rng.random_range(1..=2);
    let d11 = if zero_d11 { Mat::zeros(n_z, n_w) } else { gaussian(rng, n_z, n_w, 0.3) };
    Plant::new(
        gaussian(rng, n_x, n_x, 1.0 / (n_x as f64).sqrt()),
        gaussian(rng, n_x, n_w, 1.0),
        gaussian(rng, n_x, n_u, 1.0),
        gaussian(rng, n_z, n_x, 1.0),
        gaussian(rng, n_y, n_x, 1.0),
        d11,
        gaussian(rng, n_z, n_u, 1.0),
        gaussian(rng, n_y, n_w, 1.0),
    )
    .unwrap()
}

/// Observer-based controller from a control and a filter Riccati equation;
/// `None` when either equation has no stabilizing solution.
pub fn observer_controller(plant: &Plant, q: f64, r: f64) -> Option<Controller> {
    let d = plant.dims();
    let tol = Tolerances::default();
    let qx = SymMatrix::new(Mat::identity(d.n_x, d.n_x) * q).unwrap();
    let p = solve_care(&plant.a, &plant.b2, &qx, &SymMatrix::new(Mat::identity(d.n_u, d.n_u) * r).unwrap(), 1e-9).ok()?;
    let f = plant.b2.transpose() * p.as_mat() / r;
    let s = solve_care(
        &plant.a.transpose(),
        &plant.c2.transpose(),
        &qx,
        &SymMatrix::new(Mat::identity(d.n_y, d.n_y) * r).unwrap(),
        1e-9,
    )
    .ok()?;
    let l = s.as_mat() * plant.c2.transpose() / r;
    let k = Controller::new(&plant.a - &plant.b2 * &f - &l * &plant.c2, l, -f, Mat::zeros(d.n_u, d.n_y)).ok()?;
    kgamma_core::analysis::in_cstab(plant, &k, &tol).ok()?.then_some(k)
}

/// Well-conditioned random matrix with determinant of the given sign.
pub fn random_transform(rng: &mut ChaCha8Rng, n: usize, positive: bool) -> Mat {
    let g = gaussian(rng, n, n, 1.0);
    let q = g.qr().q();
    let s = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)));
    let mut t = &q * s * q.transpose() * gaussian(rng, n, n, 1.0).qr().q();
    if (determinant(&t) > 0.0) != positive {
        t.column_mut(0).neg_mut();
    }
    t
}

/// Stabilizing controller for `plant` in a random basis; strictly proper
/// unless `feedthrough` is set, in which case a small `D_K` is tried.
pub fn random_stabilizing(rng: &mut ChaCha8Rng, plant: &Plant, feedthrough: bool) -> Option<Controller> {
    let q = 10f64.powf(rng.random_range(-0.5..0.5));
    let r = 10f64.powf(rng.random_range(-0.5..0.5));
    let k = observer_controller(plant, q, r)?;
    let positive = rng.random_bool(0.5);
    let mut k = similarity_transform(&k, &random_transform(rng, k.order(), positive), &Tolerances::default()).ok()?;
    if feedthrough {
        let d = plant.dims();
        let mut kd = k.clone();
        kd.d_k = gaussian(rng, d.n_u, d.n_y, 0.1);
        if kgamma_core::analysis::in_cstab(plant, &kd, &Tolerances::default()).ok()? {
            k = kd;
        }
    }
    Some(k)
}

/// Random plant with a random stabilizing controller and `γ = 1.2‖T_zw‖∞`;
/// instances with `‖T_zw‖∞ > 100` are redrawn.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, feedthrough: bool) -> (Plant, Controller, f64) {
    loop {
        let n = rng.random_range(1..=max_n);
        let plant = random_plant(rng, n, false);
        let Some(k) = random_stabilizing(rng, &plant, feedthrough) else { continue };
        let Ok(norm) = hinf_norm(&close_loop(&plant, &k).unwrap(), &Tolerances::default()) else { continue };
        if norm.hi.is_finite() && norm.hi <= 100.0 {
            return (plant, k, 1.2 * norm.hi);
        }
    }
}

/// Random Hurwitz system with the given sizes.
pub fn random_stable_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize, with_d: bool) -> ClosedLoop {
    let mut a = gaussian(rng, n, n, 1.0);
    let shift = a.clone().complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let target = rng.random_range(0.1..1.0);
    for i in 0..n {
        a[(i, i)] -= shift + target;
    }
    let d = if with_d { gaussian(rng, p, m, 0.5) } else { Mat::zeros(p, m) };
    ClosedLoop::from_parts(a, gaussian(rng, n, m, 1.0), gaussian(rng, p, n, 1.0), d).unwrap()
}

/// `G(jω)` by a direct complex solve.
pub fn freq_response(sys: &ClosedLoop, omega: f64) -> DMatrix<Complex64> {
    let n = sys.a.nrows();
    let a = sys.a.map(|v| Complex64::new(v, 0.0));
    let m = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, omega) - a;
    let b = sys.b.map(|v| Complex64::new(v, 0.0));
    let x = m.lu().solve(&b).expect("jωI − A is invertible for a stable system");
    sys.c.map(|v| Complex64::new(v, 0.0)) * x + sys.d.map(|v| Complex64::new(v, 0.0))
}

/// Largest singular value on a log grid of `points` frequencies plus `ω = 0`.
pub fn grid_hinf(sys: &ClosedLoop, points: usize) -> f64 {
    let (lo, hi) = (-4.0_f64, 4.0_f64);
    let mut best = freq_response(sys, 0.0).singular_values().max();
    for i in 0..points {
        let w = 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64);
        best = best.max(freq_response(sys, w).singular_values().max());
    }
    best
}

/// `‖G‖₂²` as `(1/π)∫₀^∞ ‖G(jω)‖_F² dω` by adaptive Simpson quadrature in `θ = atan ω`.
pub fn h2_quadrature(sys: &ClosedLoop, rel_tol: f64) -> f64 {
    let f = |theta: f64| -> f64 {
        if theta >= std::f64::consts::FRAC_PI_2 {
            return 0.0;
        }
        let w = theta.tan();
        let g = freq_response(sys, w);
        let fro: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        fro / theta.cos().powi(2)
    };
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (depth < 34 && (left + right - whole).abs() <= 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (a, b) = (0.0, std::f64::consts::FRAC_PI_2);
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let h = (b - a) / 4000.0;
    let scale = ((0..4000).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h).abs().max(1e-300);
    simpson(&f, a, b, fa, fm, fb, whole, rel_tol * scale * 1e-2, 40) / std::f64::consts::PI
}
