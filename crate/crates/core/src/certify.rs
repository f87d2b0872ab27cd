//! LMI certificates: the bounded-real witness `P` for the H∞ level and the
//! H2 witness `(P, Γ)`.

use crate::analysis::{gamma_is_upper_bound, h2_norm_squared};
use crate::error::{Error, Result};
use crate::model::{close_loop, ClosedLoop, Controller, Plant, STRICTLY_PROPER_TOL};
use crate::numerics::{
    block, block_diag, max_abs, max_eig_sym, min_eig_sym, norm2, solve, solve_lyapunov,
    solve_riccati, spectral_abscissa, Mat, SymMatrix, Tolerances,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HinfCertificate {
    pub p: SymMatrix,
    pub gamma: f64,
    /// `−λ_max` of the bounded-real block matrix.
    pub lmi_margin_achieved: f64,
    /// `λ_min(P)`.
    pub pos_def_margin: f64,
    /// Output regularization used in the Riccati construction.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct H2Certificate {
    pub p: SymMatrix,
    pub gamma_mat: SymMatrix,
    pub gamma: f64,
    /// `−λ_max([AᵀP+PA, PB; BᵀP, −I])`.
    pub lmi_margin_achieved: f64,
    /// `λ_min([P, Cᵀ; C, Γ])`.
    pub pos_def_margin: f64,
    /// `γ − trace(Γ)`.
    pub trace_slack: f64,
}

/// Scale used to make LMI margins relative.
pub(crate) fn lmi_scale(m: &Mat) -> f64 {
    1.0 + max_abs(m)
}

/// `[AᵀP+PA, PB, Cᵀ; BᵀP, −γI, Dᵀ; C, D, −γI]`.
pub fn bounded_real_matrix(p: &SymMatrix, sys: &ClosedLoop, gamma: f64) -> Result<SymMatrix> {
    let n = sys.a.nrows();
    if p.dim() != n {
        return Err(Error::InvalidInput(format!("P must be {n}x{n}")));
    }
    let p = p.as_mat();
    let (n_w, n_z) = (sys.b.ncols(), sys.c.nrows());
    let top = sys.a.transpose() * p + p * &sys.a;
    let pb = p * &sys.b;
    let m = block(&[
        &[&top, &pb, &sys.c.transpose()],
        &[&pb.transpose(), &(Mat::identity(n_w, n_w) * -gamma), &sys.d.transpose()],
        &[&sys.c, &sys.d, &(Mat::identity(n_z, n_z) * -gamma)],
    ]);
    SymMatrix::new(m)
}

/// Returns `(λ_max` of the bounded-real block matrix, `λ_min(P))`.
pub fn verify_bounded_real(p: &SymMatrix, sys: &ClosedLoop, gamma: f64) -> Result<(f64, f64)> {
    let m = bounded_real_matrix(p, sys, gamma)?;
    Ok((max_eig_sym(&m)?, min_eig_sym(p)?))
}

/// Stabilizing solution of the bounded-real Riccati equation for the closed
/// loop with outputs augmented by `ε·I`.
fn bounded_real_riccati(sys: &ClosedLoop, gamma: f64, eps: f64, tol: &Tolerances) -> Result<SymMatrix> {
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let n = a.nrows();
    let n_w = b.ncols();
    let r = Mat::identity(n_w, n_w) * gamma - d.transpose() * d / gamma;
    let r_inv_dtc = solve(&r, &(d.transpose() * c))?;
    let a_t = a + b * &r_inv_dtc / gamma;
    let g = SymMatrix::symmetrize(-(b * solve(&r, &b.transpose())?));
    let q = SymMatrix::symmetrize(
        c.transpose() * c / gamma
            + Mat::identity(n, n) * (eps * eps / gamma)
            + c.transpose() * d * &r_inv_dtc / (gamma * gamma),
    );
    solve_riccati(&a_t, &g, &q, tol.eig_tol)
}

fn bounded_real_for_loop(cl: &ClosedLoop, gamma: f64, tol: &Tolerances) -> Result<HinfCertificate> {
    if spectral_abscissa(&cl.a)? >= -tol.stability_margin {
        return Err(Error::PreconditionViolation("controller is not stabilizing".into()));
    }
    if norm2(&cl.d) >= gamma {
        return Err(Error::CertificateConstruction(format!(
            "γ = {gamma} does not exceed σ_max(D_cl)"
        )));
    }
    if !gamma_is_upper_bound(cl, gamma, tol)? {
        return Err(Error::CertificateConstruction(format!(
            "closed-loop H∞ norm is not below γ = {gamma}"
        )));
    }
    let mut best: Option<(f64, HinfCertificate)> = None;
    let mut eps = 1.0 + norm2(&cl.c);
    while eps >= 1e-14 {
        if let Ok(p) = bounded_real_riccati(cl, gamma, eps, tol) {
            let m = bounded_real_matrix(&p, cl, gamma)?;
            let lmi = -max_eig_sym(&m)?;
            let pd = min_eig_sym(&p)?;
            let score = (lmi / lmi_scale(&m)).min(pd / lmi_scale(&p));
            if matches!(&best, Some((s, _)) if score <= *s) {
                break;
            }
            let cert = HinfCertificate { p, gamma, lmi_margin_achieved: lmi, pos_def_margin: pd, epsilon: eps };
            best = Some((score, cert));
        }
        eps *= 0.5;
    }
    match best {
        Some((score, c)) if score >= tol.lmi_margin => Ok(c),
        _ => Err(Error::CertificateConstruction(format!(
            "no strictly verified bounded-real certificate at γ = {gamma}"
        ))),
    }
}

/// Bounded-real certificate for `K ∈ K_γ`.
///
/// `P` solves the bounded-real Riccati equation of the closed loop with its
/// output augmented by `ε·I`. `ε` starts at `1 + ‖C_cl‖₂` and is halved
/// while the relative margin improves. The best strictly verified `P` is
/// returned.
pub fn bounded_real_certificate(
    plant: &Plant,
    k: &Controller,
    gamma: f64,
    tol: &Tolerances,
) -> Result<HinfCertificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
    }
    let cl = close_loop(plant, k)?;
    bounded_real_for_loop(&cl, gamma, tol)
}

/// Bounded-real certificate for a raw stable realization.
pub fn bounded_real_certificate_for(
    sys: &ClosedLoop,
    gamma: f64,
    tol: &Tolerances,
) -> Result<HinfCertificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
    }
    bounded_real_for_loop(sys, gamma, tol)
}

/// H2 LMI blocks `([AᵀP+PA, PB; BᵀP, −I], [P, Cᵀ; C, Γ])`.
pub fn h2_matrices(p: &SymMatrix, gamma_mat: &SymMatrix, sys: &ClosedLoop) -> Result<(SymMatrix, SymMatrix)> {
    let n = sys.a.nrows();
    let (n_w, n_z) = (sys.b.ncols(), sys.c.nrows());
    if p.dim() != n || gamma_mat.dim() != n_z {
        return Err(Error::InvalidInput("H2 certificate dimensions do not match".into()));
    }
    let pm = p.as_mat();
    let pb = pm * &sys.b;
    let first = block(&[
        &[&(sys.a.transpose() * pm + pm * &sys.a), &pb],
        &[&pb.transpose(), &(-Mat::identity(n_w, n_w))],
    ]);
    let second = block(&[&[pm, &sys.c.transpose()], &[&sys.c, gamma_mat.as_mat()]]);
    Ok((SymMatrix::new(first)?, SymMatrix::new(second)?))
}

/// Returns `(λ_max(first block), λ_min(second block), trace Γ)`.
pub fn verify_h2(p: &SymMatrix, gamma_mat: &SymMatrix, sys: &ClosedLoop) -> Result<(f64, f64, f64)> {
    let (first, second) = h2_matrices(p, gamma_mat, sys)?;
    Ok((max_eig_sym(&first)?, min_eig_sym(&second)?, gamma_mat.trace()))
}

/// H2 certificate for `K ∈ L_γ`.
///
/// `P = S⁻¹` with `A S + S Aᵀ + B Bᵀ + ε² I = 0`, so that the first block
/// has Schur complement `−ε² P²`. `Γ = C S Cᵀ + δ (C S Cᵀ + s I)`. `ε` and
/// `δ` are sized from the slack `γ − ‖T_zw‖₂²` and halved until every
/// margin holds. Failing that, the best candidate over a wider grid of
/// `(ε, δ)` and a regularizer shaped like the controllability Gramian is
/// returned.
pub fn h2_certificate(plant: &Plant, k: &Controller, gamma: f64, tol: &Tolerances) -> Result<H2Certificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
    }
    if max_abs(&k.d_k) > STRICTLY_PROPER_TOL {
        return Err(Error::PreconditionViolation("H2 certificate needs D_K = 0".into()));
    }
    let cl = close_loop(plant, k)?;
    if spectral_abscissa(&cl.a)? >= -tol.stability_margin {
        return Err(Error::PreconditionViolation("controller is not stabilizing".into()));
    }
    let h2 = h2_norm_squared(&cl, tol)?;
    let slack = gamma - h2;
    if slack <= tol.lmi_margin * gamma.max(1.0) {
        return Err(Error::CertificateConstruction(format!(
            "H2 cost {h2} leaves no margin below γ = {gamma}"
        )));
    }
    let gram = H2Gramians::new(&cl, false, tol)?;
    let mut frac = 0.25;
    for _ in 0..60 {
        if let Some(c) = gram.candidate(&cl, gamma, slack, frac, frac, tol)? {
            return Ok(c);
        }
        frac *= 0.5;
    }
    let score = |c: &H2Certificate| {
        let first = c.lmi_margin_achieved / (1.0 + max_abs(&c.p) * (1.0 + norm2(&cl.a)));
        first.min(c.pos_def_margin / (1.0 + max_abs(&c.p) + max_abs(&c.gamma_mat)))
    };
    h2_certificate_family(&cl, gamma, tol)?
        .into_iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .ok_or_else(|| Error::CertificateConstruction(format!("H2 certificate margins fail at γ = {gamma}")))
}

struct H2Gramians {
    wc: SymMatrix,
    wi: SymMatrix,
    c_wi: f64,
    s_shift: f64,
}

impl H2Gramians {
    /// Gramians for the regularizer `AW + WAᵀ + Q = 0`; `Q = I` unless `shaped`,
    /// in which case `Q = W_c + μI` follows the controllability Gramian.
    fn new(cl: &ClosedLoop, shaped: bool, tol: &Tolerances) -> Result<Self> {
        let n = cl.a.nrows();
        let at = cl.a.transpose();
        let wc = solve_lyapunov(&at, &SymMatrix::symmetrize(&cl.b * cl.b.transpose()), tol.stability_margin)?;
        let q = if shaped {
            let mu = 1e-2 * max_eig_sym(&wc)?.max(1e-12);
            SymMatrix::symmetrize(wc.as_mat() + Mat::identity(n, n) * mu)
        } else {
            SymMatrix::identity(n)
        };
        let wi = solve_lyapunov(&at, &q, tol.stability_margin)?;
        let c_wi = (&cl.c * wi.as_mat() * cl.c.transpose()).trace();
        let c_wc = (&cl.c * wc.as_mat() * cl.c.transpose()).trace();
        let s_shift = c_wc.max(1.0) / cl.c.nrows() as f64;
        Ok(Self { wc, wi, c_wi, s_shift })
    }

    /// Certificate spending `fe` of the slack on `ε²` and `fd` on `δ`, if
    /// every margin holds.
    fn candidate(
        &self,
        cl: &ClosedLoop,
        gamma: f64,
        slack: f64,
        fe: f64,
        fd: f64,
        tol: &Tolerances,
    ) -> Result<Option<H2Certificate>> {
        let n_z = cl.c.nrows();
        let eps2 = fe * slack / self.c_wi.max(f64::MIN_POSITIVE);
        let s = SymMatrix::symmetrize(self.wc.as_mat() + self.wi.as_mat() * eps2);
        let csc = SymMatrix::symmetrize(&cl.c * s.as_mat() * cl.c.transpose());
        let delta = fd * slack / (csc.trace() + self.s_shift * n_z as f64);
        let gamma_mat =
            SymMatrix::symmetrize(csc.as_mat() * (1.0 + delta) + Mat::identity(n_z, n_z) * (delta * self.s_shift));
        let Ok(p) = crate::numerics::inverse(s.as_mat()).and_then(SymMatrix::new) else {
            return Ok(None);
        };
        let (first, second) = h2_matrices(&p, &gamma_mat, cl)?;
        let l1 = max_eig_sym(&first)?;
        let l2 = min_eig_sym(&second)?;
        let trace_slack = gamma - gamma_mat.trace();
        let ok = l1 <= -tol.lmi_margin * lmi_scale(&first)
            && l2 >= tol.lmi_margin * lmi_scale(&second)
            && trace_slack >= tol.lmi_margin * gamma.max(1.0);
        Ok(ok.then_some(H2Certificate { p, gamma_mat, gamma, lmi_margin_achieved: -l1, pos_def_margin: l2, trace_slack }))
    }
}

/// Alternative strictly verified H2 certificates for `K ∈ L_γ`, spreading the
/// slack differently between `ε²` and `δ`.
pub(crate) fn h2_certificate_family(cl: &ClosedLoop, gamma: f64, tol: &Tolerances) -> Result<Vec<H2Certificate>> {
    let slack = gamma - h2_norm_squared(cl, tol)?;
    if slack <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for shaped in [false, true] {
        let gram = H2Gramians::new(cl, shaped, tol)?;
        let mut fe: f64 = 0.8;
        for _ in 0..30 {
            for fd in [0.15, 0.015] {
                if let Some(c) = gram.candidate(cl, gamma, slack, fe, fd, tol)? {
                    out.push(c);
                }
            }
            fe *= 0.5;
        }
    }
    Ok(out)
}

/// Alternative strictly verified bounded-real certificates for a closed loop
/// with `‖T‖∞ < γ`: Riccati solutions at intermediate levels between the
/// norm and `γ` over a range of output regularizations.
pub(crate) fn bounded_real_family(cl: &ClosedLoop, gamma: f64, tol: &Tolerances) -> Result<Vec<SymMatrix>> {
    let norm = crate::analysis::hinf_norm(cl, tol)?.hi;
    if norm >= gamma {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for f in [1.0, 0.5, 0.1] {
        let level = norm + f * (gamma - norm);
        let mut eps = 16.0 * (1.0 + norm2(&cl.c));
        while eps >= 1e-10 {
            if let Ok(p) = bounded_real_riccati(cl, level, eps, tol) {
                let m = bounded_real_matrix(&p, cl, gamma)?;
                if max_eig_sym(&m)? <= -tol.lmi_margin * lmi_scale(&m) && min_eig_sym(&p)? >= tol.lmi_margin * lmi_scale(&p) {
                    out.push(p);
                }
            }
            eps *= 0.5;
        }
    }
    Ok(out)
}

/// Congruence of a certificate under the controller similarity `T`:
/// `P' = diag(I, T)⁻ᵀ P diag(I, T)⁻¹`.
pub fn transform_certificate_p(p: &SymMatrix, t: &Mat) -> Result<SymMatrix> {
    let n = t.nrows();
    let t_inv = crate::numerics::inverse(t)?;
    let s = block_diag(&[&Mat::identity(p.dim() - n, p.dim() - n), &t_inv]);
    SymMatrix::new(s.transpose() * p.as_mat() * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::hinf_norm;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar_sys(a: f64, b: f64, c: f64, d: f64) -> ClosedLoop {
        let s = |v| Mat::from_element(1, 1, v);
        ClosedLoop::from_parts(s(a), s(b), s(c), s(d)).unwrap()
    }

    #[test]
    fn example_one_certificate() {
        let plant = Plant::scalar_example(1.0);
        let k = Controller::scalar(0.0, 2.0, -2.0, -2.0);
        let cert = bounded_real_certificate(&plant, &k, 3.33, &tol()).unwrap();
        let cl = close_loop(&plant, &k).unwrap();
        let (lmi, pmin) = verify_bounded_real(&cert.p, &cl, 3.33).unwrap();
        assert!(lmi < 0.0 && pmin > 0.0);
        assert!((lmi + cert.lmi_margin_achieved).abs() < 1e-10);
        assert!((pmin - cert.pos_def_margin).abs() < 1e-10);
    }

    #[test]
    fn scalar_certificate_satisfies_hand_expansion() {
        let sys = scalar_sys(-1.0, 1.0, 1.0, 0.0);
        let cert = bounded_real_certificate_for(&sys, 2.0, &tol()).unwrap();
        let p = cert.p[(0, 0)];
        // [−2p, p, 1; p, −2, 0; 1, 0, −2] ≺ 0 by leading minors of −M.
        let m1 = 2.0 * p;
        let m2 = 4.0 * p - p * p;
        let m3 = 2.0 * m2 - 2.0;
        assert!(p > 0.0 && m1 > 0.0 && m2 > 0.0 && m3 > 0.0);
    }

    #[test]
    fn below_norm_is_refused() {
        let sys = scalar_sys(-1.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            bounded_real_certificate_for(&sys, 0.9, &tol()),
            Err(Error::CertificateConstruction(_))
        ));
    }

    #[test]
    fn verify_examples() {
        let sys = scalar_sys(-1.0, 0.0, 0.0, 0.0);
        let (lmi, pmin) = verify_bounded_real(&SymMatrix::identity(1), &sys, 1.0).unwrap();
        assert!((lmi + 1.0).abs() < 1e-14 && (pmin - 1.0).abs() < 1e-14);
        let sys = scalar_sys(-1.0, 1.0, 1.0, 0.0);
        let (lmi, _) = verify_bounded_real(&SymMatrix::zeros(1), &sys, 1.0).unwrap();
        assert!(lmi >= 0.0);
    }

    #[test]
    fn certificate_transforms_with_controller() {
        let plant = Plant::scalar_example(1.0);
        let k = Controller::scalar(0.0, 2.0, -2.0, -2.0);
        let cert = bounded_real_certificate(&plant, &k, 3.33, &tol()).unwrap();
        let t = Mat::from_element(1, 1, -3.0);
        let kt = crate::model::similarity_transform(&k, &t, &tol()).unwrap();
        let pt = transform_certificate_p(&cert.p, &t).unwrap();
        let cl = close_loop(&plant, &kt).unwrap();
        let (lmi, pmin) = verify_bounded_real(&pt, &cl, 3.33).unwrap();
        assert!(lmi < 0.0 && pmin > 0.0);
    }

    #[test]
    fn certificate_near_norm_level() {
        let plant = Plant::scalar_example(1.0);
        let k = Controller::scalar(0.0, 2.0, -2.0, -2.0);
        let cl = close_loop(&plant, &k).unwrap();
        let norm = hinf_norm(&cl, &tol()).unwrap().hi;
        assert!(bounded_real_certificate(&plant, &k, 1.05 * norm, &tol()).is_ok());
        assert!(bounded_real_certificate(&plant, &k, 0.95 * norm, &tol()).is_err());
    }

    fn lqg_scalar() -> Plant {
        let one = Mat::from_element(1, 1, 1.0);
        crate::model::lqg_plant(&one, &one, &one, &crate::model::LqgWeights::identity(1, 1, 1), &tol()).unwrap()
    }

    #[test]
    fn h2_certificate_examples() {
        let plant = lqg_scalar();
        let k = Controller::scalar(0.0, -2.0, 2.0, -2.0);
        let cl = close_loop(&plant, &k).unwrap();
        let h2 = h2_norm_squared(&cl, &tol()).unwrap();
        let cert = h2_certificate(&plant, &k, 2.0 * h2, &tol()).unwrap();
        let (l1, l2, tr) = verify_h2(&cert.p, &cert.gamma_mat, &cl).unwrap();
        assert!(l1 < 0.0 && l2 > 0.0 && tr < 2.0 * h2);
        assert!(matches!(
            h2_certificate(&plant, &k, h2 * (1.0 + 1e-9), &tol()),
            Err(Error::CertificateConstruction(_))
        ));
    }
}
