//! System norms and the membership predicates for the stabilizing set,
//! the H∞ sublevel sets and the H2 sublevel set.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{close_loop, ClosedLoop, Controller, Plant, STRICTLY_PROPER_TOL};
use crate::numerics::{
    block, eigenvalues, max_abs, norm2, solve, solve_lyapunov, spectral_abscissa, Mat, RealSchur,
    SymMatrix, Tolerances,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    HamiltonianBisection,
    Gramian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub method: NormMethod,
}

const SWEEP_POINTS: usize = 200;
const MAX_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 200;

/// Largest singular value of the transfer matrix at `s = jω`.
pub fn sigma_max_at(sys: &ClosedLoop, omega: f64) -> Result<f64> {
    let g = sys.transfer(Complex::new(0.0, omega))?;
    Ok(g.singular_values().iter().fold(0.0_f64, |a, &b| a.max(b)))
}

/// Peak of `σ_max(G(jω))` over `ω = 0` and a log-spaced grid scaled to the
/// spectrum of `A`. Always a lower bound on the H∞ norm.
fn sweep_peak(sys: &ClosedLoop) -> Result<f64> {
    let radius = eigenvalues(&sys.a)?.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    let (lo, hi) = ((radius.max(1e-3) * 1e-3).log10(), (radius.max(1.0) * 1e3).log10());
    let mut peak = sigma_max_at(sys, 0.0)?;
    for i in 0..SWEEP_POINTS {
        let w = 10f64.powf(lo + (hi - lo) * i as f64 / (SWEEP_POINTS - 1) as f64);
        peak = peak.max(sigma_max_at(sys, w)?);
    }
    Ok(peak)
}

/// True when `γ` is a strict upper bound on the H∞ norm of a stable system:
/// `σ_max(D) < γ` and the Hamiltonian has no eigenvalue within
/// `eig_tol · (1 + ‖H‖)` of the imaginary axis.
pub fn gamma_is_upper_bound(sys: &ClosedLoop, gamma: f64, tol: &Tolerances) -> Result<bool> {
    if gamma <= 0.0 {
        return Ok(false);
    }
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    if norm2(d) >= gamma {
        return Ok(false);
    }
    let n_w = d.ncols();
    let n_z = d.nrows();
    // R = γ²I − DᵀD
    let r = Mat::identity(n_w, n_w) * (gamma * gamma) - d.transpose() * d;
    let r_inv_dt_c = solve(&r, &(d.transpose() * c))?;
    let r_inv_bt = solve(&r, &b.transpose())?;
    let h11 = a + b * &r_inv_dt_c;
    let h12 = b * &r_inv_bt;
    let h21 = -(c.transpose() * (Mat::identity(n_z, n_z) + d * solve(&r, &d.transpose())?) * c);
    let h = block(&[&[&h11, &h12], &[&h21, &(-h11.transpose())]]);
    let axis_tol = tol.eig_tol * (1.0 + max_abs(&h));
    let eigs = RealSchur::new(&h)?.eigenvalues();
    Ok(eigs.iter().all(|e| e.re.abs() > axis_tol))
}

fn ensure_stable(sys: &ClosedLoop, tol: &Tolerances) -> Result<()> {
    let abscissa = spectral_abscissa(&sys.a)?;
    if abscissa >= -tol.stability_margin {
        return Err(Error::PreconditionViolation(format!(
            "closed loop is not stable (spectral abscissa {abscissa:e})"
        )));
    }
    Ok(())
}

/// H∞ norm by Hamiltonian bisection. `value` is the upper end of the final
/// bracket, so it is always a certified upper bound up to the eigenvalue
/// tolerance.
pub fn hinf_norm(sys: &ClosedLoop, tol: &Tolerances) -> Result<NormResult> {
    ensure_stable(sys, tol)?;
    let sigma_d = norm2(&sys.d);
    let peak = sweep_peak(sys)?;
    let mut lo = peak.max(sigma_d);
    let mut hi = (2.0 * peak + sigma_d).max(1e-12);
    let mut doublings = 0;
    while !gamma_is_upper_bound(sys, hi, tol)? {
        lo = lo.max(hi);
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NumericalFailure("H∞ upper bracket not found".into()));
        }
    }
    let mut iters = 0;
    while hi - lo > tol.bisect_tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if gamma_is_upper_bound(sys, mid, tol)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iters += 1;
        if iters >= MAX_BISECTIONS {
            return Err(Error::NumericalFailure("H∞ bisection did not converge".into()));
        }
    }
    Ok(NormResult { value: hi, lo, hi, method: NormMethod::HamiltonianBisection })
}

/// Squared H2 norm `trace(Bᵀ P_o B)` with `P_o` the observability Gramian.
pub fn h2_norm_squared(sys: &ClosedLoop, tol: &Tolerances) -> Result<f64> {
    if max_abs(&sys.d) > STRICTLY_PROPER_TOL {
        return Err(Error::InfiniteH2Norm);
    }
    ensure_stable(sys, tol)?;
    let q = SymMatrix::symmetrize(sys.c.transpose() * &sys.c);
    let po = solve_lyapunov(&sys.a, &q, tol.stability_margin)?;
    Ok((sys.b.transpose() * po.as_mat() * &sys.b).trace().max(0.0))
}

/// H2 norm wrapped in a [`NormResult`] with a degenerate bracket.
pub fn h2_norm(sys: &ClosedLoop, tol: &Tolerances) -> Result<NormResult> {
    let v = h2_norm_squared(sys, tol)?.sqrt();
    Ok(NormResult { value: v, lo: v, hi: v, method: NormMethod::Gramian })
}

/// `K ∈ C_stab`: the closed-loop state matrix is Hurwitz with margin.
pub fn in_cstab(plant: &Plant, k: &Controller, tol: &Tolerances) -> Result<bool> {
    let cl = close_loop(plant, k)?;
    Ok(spectral_abscissa(&cl.a)? < -tol.stability_margin)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive and finite, got {gamma}")));
    }
    Ok(())
}

/// `K ∈ K_γ` (or the strictly proper subset when `strictly_proper`).
///
/// Decided by a single Hamiltonian test at `γ`: the bisection bracket of
/// [`hinf_norm`] can be driven below `γ` exactly when `γ` itself passes.
pub fn in_kgamma(
    plant: &Plant,
    k: &Controller,
    gamma: f64,
    strictly_proper: bool,
    tol: &Tolerances,
) -> Result<bool> {
    check_gamma(gamma)?;
    if strictly_proper && !k.is_strictly_proper() {
        return Ok(false);
    }
    let cl = close_loop(plant, k)?;
    if spectral_abscissa(&cl.a)? >= -tol.stability_margin {
        return Ok(false);
    }
    if sigma_max_at(&cl, 0.0)? >= gamma {
        return Ok(false);
    }
    gamma_is_upper_bound(&cl, gamma, tol)
}

/// `K ∈ L_γ`: strictly proper, stabilizing and `‖T_zw‖₂² < γ`.
pub fn in_lgamma(plant: &Plant, k: &Controller, gamma: f64, tol: &Tolerances) -> Result<bool> {
    check_gamma(gamma)?;
    if !k.is_strictly_proper() {
        return Ok(false);
    }
    let cl = close_loop(plant, k)?;
    if spectral_abscissa(&cl.a)? >= -tol.stability_margin {
        return Ok(false);
    }
    Ok(h2_norm_squared(&cl, tol)? < gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(a: &[f64], b: &[f64], c: &[f64], d: &[f64], n: usize, m: usize, p: usize) -> ClosedLoop {
        ClosedLoop::from_parts(
            Mat::from_row_slice(n, n, a),
            Mat::from_row_slice(n, m, b),
            Mat::from_row_slice(p, n, c),
            Mat::from_row_slice(p, m, d),
        )
        .unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn k1() -> Controller {
        Controller::scalar(0.0, 2.0, -2.0, -2.0)
    }

    fn k2() -> Controller {
        Controller::scalar(0.0, -2.0, 2.0, -2.0)
    }

    #[test]
    fn hinf_scalar_examples() {
        let r = hinf_norm(&sys(&[-1.0], &[1.0], &[1.0], &[0.0], 1, 1, 1), &tol()).unwrap();
        assert!(r.lo <= 1.0 && 1.0 <= r.hi + 1e-12);
        assert!((r.value - 1.0).abs() < 2e-6);
        let r = hinf_norm(&sys(&[-1.0], &[0.0], &[0.0], &[2.0], 1, 1, 1), &tol()).unwrap();
        assert!((r.value - 2.0).abs() < 4e-6);
        assert!(r.hi - r.lo <= tol().bisect_tol * r.hi.max(1.0));
    }

    #[test]
    fn hinf_rejects_unstable() {
        let err = hinf_norm(&sys(&[1.0], &[1.0], &[1.0], &[0.0], 1, 1, 1), &tol());
        assert!(matches!(err, Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn zero_transfer_has_zero_norm() {
        let r = hinf_norm(&sys(&[-1.0], &[0.0], &[1.0], &[0.0], 1, 1, 1), &tol()).unwrap();
        assert!(r.value < 1e-6);
    }

    #[test]
    fn example_one_norm_below_bound() {
        let plant = Plant::scalar_example(1.0);
        let cl = close_loop(&plant, &k1()).unwrap();
        let r = hinf_norm(&cl, &tol()).unwrap();
        assert!(r.value < 3.33);
        // T(0) = −1 for every stabilizing controller of this plant.
        assert!(r.value >= 1.0);
    }

    #[test]
    fn h2_examples() {
        let v = h2_norm_squared(&sys(&[-1.0], &[1.0], &[1.0], &[0.0], 1, 1, 1), &tol()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let s = ClosedLoop::from_parts(
            -Mat::identity(2, 2),
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Mat::zeros(2, 2),
        )
        .unwrap();
        assert!((h2_norm_squared(&s, &tol()).unwrap() - 1.0).abs() < 1e-15);
        let err = h2_norm_squared(&sys(&[-1.0], &[1.0], &[1.0], &[0.1], 1, 1, 1), &tol());
        assert!(matches!(err, Err(Error::InfiniteH2Norm)));
    }

    #[test]
    fn stabilizing_set_examples() {
        let plant = Plant::scalar_example(1.0);
        assert!(in_cstab(&plant, &k1(), &tol()).unwrap());
        let mid = k1().lerp(&k2(), 0.5);
        assert!(!in_cstab(&plant, &mid, &tol()).unwrap());
        let stable = Plant::scalar_example(-1.0);
        assert!(in_cstab(&stable, &Controller::scalar(0.0, 0.0, 0.0, -1.0), &tol()).unwrap());
    }

    #[test]
    fn kgamma_examples() {
        let plant = Plant::scalar_example(1.0);
        assert!(in_kgamma(&plant, &k1(), 3.33, false, &tol()).unwrap());
        assert!(in_kgamma(&plant, &k2(), 3.33, false, &tol()).unwrap());
        assert!(in_kgamma(&plant, &k1(), 3.33, true, &tol()).unwrap());
        let mid = k1().lerp(&k2(), 0.5);
        for g in [0.5, 3.33, 1e6] {
            assert!(!in_kgamma(&plant, &mid, g, false, &tol()).unwrap());
        }
        assert!(!in_kgamma(&plant, &k1(), 0.9, false, &tol()).unwrap());
        assert!(in_kgamma(&plant, &k1(), 0.0, false, &tol()).is_err());
    }

    #[test]
    fn kgamma_agrees_with_bracket() {
        let plant = Plant::scalar_example(1.0);
        let cl = close_loop(&plant, &k1()).unwrap();
        let r = hinf_norm(&cl, &tol()).unwrap();
        assert!(in_kgamma(&plant, &k1(), r.hi * (1.0 + 1e-5), false, &tol()).unwrap());
        assert!(!in_kgamma(&plant, &k1(), r.lo * (1.0 - 1e-5), false, &tol()).unwrap());
    }

    #[test]
    fn lgamma_examples() {
        let one = Mat::from_element(1, 1, 1.0);
        let w = crate::model::LqgWeights::identity(1, 1, 1);
        let plant = crate::model::lqg_plant(&one, &one, &one, &w, &tol()).unwrap();
        let k = Controller::scalar(0.0, -2.0, 2.0, -2.0);
        let h2 = h2_norm_squared(&close_loop(&plant, &k).unwrap(), &tol()).unwrap();
        assert!(in_lgamma(&plant, &k, 10.0 * h2, &tol()).unwrap());
        assert!(!in_lgamma(&plant, &k, 0.5 * h2, &tol()).unwrap());
        let proper = Controller::scalar(-2.0, -2.0, 2.0, -2.0);
        assert!(!in_lgamma(&plant, &proper, 1e9, &tol()).unwrap());
    }
}
