//! Explicit paths between controllers: within one component through the
//! lifted convex set times a path in `GL`, across components through a
//! non-minimal bridge controller.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{hinf_norm, in_kgamma};
use crate::error::{Error, Result};
use crate::liftmap::{component_sign, lift, reconstruct, transform_lifted, ComponentSign, LiftedPoint};
use crate::model::{augment_reduced_for, close_loop, similarity_transform, Controller, Plant};
use crate::numerics::{determinant, max_abs, polar_decompose, solve, special_orthogonal_path, Mat, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathStatus {
    Connected,
    DifferentComponents,
    Bridged,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub controller: Controller,
    /// Upper end of the H∞ bracket of the closed loop.
    pub hinf: f64,
    pub sign: ComponentSign,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub status: PathStatus,
    pub samples: Vec<PathSample>,
    /// Similarity with negative determinant mapping one component onto the
    /// other; present for `DifferentComponents`.
    pub witness_t: Option<Mat>,
    pub endpoint_errors: (f64, f64),
    /// First parameter value whose sample failed verification.
    pub failed_at: Option<f64>,
    /// `γ − max_t hinf(t)` over the samples.
    pub min_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Number of intervals; `n_samples + 1` points are emitted per segment.
    pub n_samples: usize,
    pub seed: u64,
    /// Insert midpoints between neighbours whose norms differ by more than
    /// 10% of the slack to `γ`.
    pub refine: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { n_samples: 100, seed: 0, refine: false }
    }
}

fn sign_of_det(m: &Mat, tol: &Tolerances) -> Result<f64> {
    let d = determinant(m);
    if d.abs() <= tol.eig_tol || !d.is_finite() {
        return Err(Error::SingularInput(format!("matrix is singular (det {d:e})")));
    }
    Ok(d.signum())
}

/// Point at parameter `t` of a path in `GL` between `M0` and `M1` of equal
/// determinant sign: rotation geodesic between the orthogonal polar factors
/// times the segment between the symmetric factors. Negative determinants
/// are handled by factoring out `R = diag(−1, 1, …, 1)` on the left.
pub fn gl_path(m0: &Mat, m1: &Mat, t: f64, tol: &Tolerances) -> Result<Mat> {
    if m0.shape() != m1.shape() || m0.nrows() != m0.ncols() {
        return Err(Error::InvalidInput("path endpoints must be square of equal size".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("path parameter {t} outside [0, 1]")));
    }
    let (s0, s1) = (sign_of_det(m0, tol)?, sign_of_det(m1, tol)?);
    if s0 != s1 {
        return Err(Error::InvalidInput("endpoints have opposite determinant signs".into()));
    }
    let n = m0.nrows();
    let mut r = Mat::identity(n, n);
    if s0 < 0.0 {
        r[(0, 0)] = -1.0;
    }
    let (q0, p0) = polar_decompose(&(&r * m0), tol.eig_tol)?;
    let (q1, p1) = polar_decompose(&(&r * m1), tol.eig_tol)?;
    let q = special_orthogonal_path(&q0, &q1, t)?;
    let s = p0.as_mat() * (1.0 - t) + p1.as_mat() * t;
    Ok(&r * q * s)
}

fn verify_sample(plant: &Plant, k: &Controller, gamma: f64, strictly_proper: bool, tol: &Tolerances) -> (bool, f64) {
    let ok = in_kgamma(plant, k, gamma, strictly_proper, tol).unwrap_or(false);
    let h = close_loop(plant, k)
        .and_then(|cl| hinf_norm(&cl, tol))
        .map(|r| r.hi)
        .unwrap_or(f64::INFINITY);
    (ok && h < gamma, h)
}

/// Lifted point on the path between `z0` and `z1` at `t`.
fn lifted_at(z0: &LiftedPoint, z1: &LiftedPoint, t: f64, tol: &Tolerances) -> Result<LiftedPoint> {
    let f = z0.f_point().lerp(&z1.f_point(), t);
    let pi = gl_path(&z0.pi, &z1.pi, t, tol)?;
    let n = f.x.dim();
    let coupling = Mat::identity(n, n) - f.y.as_mat() * f.x.as_mat();
    // Ξ = (I − YX) Π⁻¹  ⇔  Πᵀ Ξᵀ = (I − YX)ᵀ.
    let xi = solve(&pi.transpose(), &coupling.transpose())?.transpose();
    Ok(f.with_factorization(pi, xi))
}

fn sample_params(n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

fn build_samples(
    plant: &Plant,
    z0: &LiftedPoint,
    z1: &LiftedPoint,
    ts: &[f64],
    gamma: f64,
    strictly_proper: bool,
    tol: &Tolerances,
) -> Result<Vec<PathSample>> {
    ts.par_iter()
        .map(|&t| {
            let z = lifted_at(z0, z1, t, tol)?;
            let sign = component_sign(&z, tol)?;
            let controller = reconstruct(plant, &z)?;
            let (verified, hinf) = verify_sample(plant, &controller, gamma, strictly_proper, tol);
            Ok(PathSample { t, controller, hinf, sign, verified })
        })
        .collect()
}

fn refine_samples(
    plant: &Plant,
    z0: &LiftedPoint,
    z1: &LiftedPoint,
    samples: Vec<PathSample>,
    gamma: f64,
    strictly_proper: bool,
    tol: &Tolerances,
) -> Result<Vec<PathSample>> {
    let mids: Vec<f64> = samples
        .windows(2)
        .filter(|w| {
            let slack = gamma - w[0].hinf.max(w[1].hinf);
            (w[0].hinf - w[1].hinf).abs() > 0.1 * slack
        })
        .map(|w| 0.5 * (w[0].t + w[1].t))
        .collect();
    if mids.is_empty() {
        return Ok(samples);
    }
    let extra = build_samples(plant, z0, z1, &mids, gamma, strictly_proper, tol)?;
    let mut all: Vec<PathSample> = samples.into_iter().chain(extra).collect();
    all.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(all)
}

fn summarize(status: PathStatus, samples: Vec<PathSample>, k0: &Controller, k1: &Controller, gamma: f64) -> PathResult {
    let failed_at = samples.iter().find(|s| !s.verified).map(|s| s.t);
    let endpoint_errors = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (a.controller.relative_error(k0), b.controller.relative_error(k1)),
        _ => (f64::NAN, f64::NAN),
    };
    let min_slack = gamma - samples.iter().map(|s| s.hinf).fold(f64::NEG_INFINITY, f64::max);
    let status = if failed_at.is_some() || !(endpoint_errors.0 <= 1e-8 && endpoint_errors.1 <= 1e-8) {
        PathStatus::Failed
    } else {
        status
    };
    PathResult { status, samples, witness_t: None, endpoint_errors, failed_at, min_slack }
}

/// Path between two lifted points of the same component, sampled at
/// `n_samples + 1` uniform parameters and verified per sample.
pub fn connect_lifted(
    plant: &Plant,
    z0: &LiftedPoint,
    z1: &LiftedPoint,
    gamma: f64,
    strictly_proper: bool,
    opts: &PathOptions,
    tol: &Tolerances,
) -> Result<PathResult> {
    if component_sign(z0, tol)? != component_sign(z1, tol)? {
        return Err(Error::PreconditionViolation("lifted endpoints lie in different components".into()));
    }
    if opts.n_samples == 0 {
        return Err(Error::InvalidInput("at least one sample interval is required".into()));
    }
    let mut samples = build_samples(plant, z0, z1, &sample_params(opts.n_samples), gamma, strictly_proper, tol)?;
    if opts.refine {
        samples = refine_samples(plant, z0, z1, samples, gamma, strictly_proper, tol)?;
    }
    let k0 = reconstruct(plant, z0)?;
    let k1 = reconstruct(plant, z1)?;
    Ok(summarize(PathStatus::Connected, samples, &k0, &k1, gamma))
}

fn both_strictly_proper(ks: &[&Controller]) -> bool {
    ks.iter().all(|k| k.is_strictly_proper())
}

/// The similarity `diag(1, …, 1, −1)`.
pub fn flip_transform(n: usize) -> Mat {
    let mut t = Mat::identity(n, n);
    t[(n - 1, n - 1)] = -1.0;
    t
}

/// Connects `K0` and `K1` inside `K_γ` when their lifts share a component,
/// otherwise reports `DifferentComponents` with a witness similarity.
pub fn connect(
    plant: &Plant,
    k0: &Controller,
    k1: &Controller,
    gamma: f64,
    opts: &PathOptions,
    tol: &Tolerances,
) -> Result<PathResult> {
    let sp = both_strictly_proper(&[k0, k1]);
    for (name, k) in [("K0", k0), ("K1", k1)] {
        if !in_kgamma(plant, k, gamma, sp, tol)? {
            return Err(Error::PreconditionViolation(format!("{name} is not in K_γ at γ = {gamma}")));
        }
    }
    let z0 = lift(plant, k0, gamma, opts.seed, tol)?;
    let z1 = lift(plant, k1, gamma, opts.seed.wrapping_add(1), tol)?;
    if component_sign(&z0, tol)? != component_sign(&z1, tol)? {
        return Ok(PathResult {
            status: PathStatus::DifferentComponents,
            samples: Vec::new(),
            witness_t: Some(flip_transform(plant.dims().n_x)),
            endpoint_errors: (reconstruct(plant, &z0)?.relative_error(k0), reconstruct(plant, &z1)?.relative_error(k1)),
            failed_at: None,
            min_slack: f64::NAN,
        });
    }
    let mut res = connect_lifted(plant, &z0, &z1, gamma, sp, opts, tol)?;
    let errs = (
        res.samples.first().map_or(f64::NAN, |s| s.controller.relative_error(k0)),
        res.samples.last().map_or(f64::NAN, |s| s.controller.relative_error(k1)),
    );
    res.endpoint_errors = errs;
    if !(errs.0 <= 1e-8 && errs.1 <= 1e-8) {
        res.status = PathStatus::Failed;
    }
    Ok(res)
}

/// The two lifts of a bridge controller fixed by `T = diag(I, −1)`:
/// `(Z₊, Z₋)` with opposite component signs, both reconstructing to `K_aug`.
pub fn dual_lift_fixed_point(
    plant: &Plant,
    k_aug: &Controller,
    gamma: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<(LiftedPoint, LiftedPoint)> {
    let n = plant.dims().n_x;
    let t = flip_transform(n);
    let moved = similarity_transform(k_aug, &t, tol)?;
    let defect = max_abs(&(moved.as_block() - k_aug.as_block()));
    if defect > 1e-10 * (1.0 + max_abs(&k_aug.as_block())) {
        return Err(Error::NotABridge(format!("controller is not fixed by diag(I, −1) (defect {defect:e})")));
    }
    let z = lift(plant, k_aug, gamma, seed, tol)?;
    let zt = transform_lifted(&z, &t, tol)?;
    match component_sign(&z, tol)? {
        ComponentSign::Plus => Ok((z, zt)),
        ComponentSign::Minus => Ok((zt, z)),
    }
}

/// Joins `K0` and `K1` through the augmented bridge controller built from
/// `K_red`: one segment inside the component of `K0`, one inside that of `K1`.
#[allow(clippy::too_many_arguments)]
pub fn connect_via_bridge(
    plant: &Plant,
    k0: &Controller,
    k1: &Controller,
    gamma: f64,
    k_red: &Controller,
    appended_eig: f64,
    opts: &PathOptions,
    tol: &Tolerances,
) -> Result<PathResult> {
    let k_aug = augment_reduced_for(plant, k_red, appended_eig)?;
    let sp = both_strictly_proper(&[k0, k1, &k_aug]);
    for (name, k) in [("K0", k0), ("K1", k1)] {
        if !in_kgamma(plant, k, gamma, sp, tol)? {
            return Err(Error::PreconditionViolation(format!("{name} is not in K_γ at γ = {gamma}")));
        }
    }
    if !in_kgamma(plant, &k_aug, gamma, sp, tol)? {
        return Err(Error::BridgeInfeasible(format!("augmented controller is not in K_γ at γ = {gamma}")));
    }
    let (zp, zm) = dual_lift_fixed_point(plant, &k_aug, gamma, opts.seed, tol)?;
    let z0 = lift(plant, k0, gamma, opts.seed.wrapping_add(1), tol)?;
    let z1 = lift(plant, k1, gamma, opts.seed.wrapping_add(2), tol)?;
    let pick = |z: &LiftedPoint| -> Result<&LiftedPoint> {
        Ok(match component_sign(z, tol)? {
            ComponentSign::Plus => &zp,
            ComponentSign::Minus => &zm,
        })
    };
    let first = connect_lifted(plant, &z0, pick(&z0)?, gamma, sp, opts, tol)?;
    let second = connect_lifted(plant, pick(&z1)?, &z1, gamma, sp, opts, tol)?;
    let mut samples: Vec<PathSample> = first.samples;
    for s in &mut samples {
        s.t *= 0.5;
    }
    samples.extend(second.samples.into_iter().map(|mut s| {
        s.t = 0.5 + 0.5 * s.t;
        s
    }));
    Ok(summarize(PathStatus::Bridged, samples, k0, k1, gamma))
}

/// Maps every sample through `𝒯_T` and re-verifies membership; the signs
/// are recomputed by lifting each image.
pub fn transform_path(
    plant: &Plant,
    path: &PathResult,
    t: &Mat,
    gamma: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<PathResult> {
    let sp = path.samples.iter().all(|s| s.controller.is_strictly_proper());
    let samples: Vec<PathSample> = path
        .samples
        .par_iter()
        .map(|s| {
            let controller = similarity_transform(&s.controller, t, tol)?;
            let (verified, hinf) = verify_sample(plant, &controller, gamma, sp, tol);
            let sign = component_sign(&lift(plant, &controller, gamma, seed, tol)?, tol)?;
            Ok(PathSample { t: s.t, controller, hinf, sign, verified })
        })
        .collect::<Result<_>>()?;
    let k0 = samples.first().map(|s| s.controller.clone());
    let k1 = samples.last().map(|s| s.controller.clone());
    match (k0, k1) {
        (Some(a), Some(b)) => Ok(summarize(path.status, samples, &a, &b, gamma)),
        _ => Err(Error::InvalidInput("path has no samples".into())),
    }
}
