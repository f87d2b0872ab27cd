//! The change of variables between controllers and lifted points
//! `(X, Y, Â, B̂, Ĉ, D̂, Π, Ξ)`, the matrix `M_γ`, its H2 analogue and the
//! reconstruction map `Φ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::certify::{
    bounded_real_certificate, bounded_real_family, bounded_real_matrix, h2_certificate, h2_certificate_family, lmi_scale,
    H2Certificate,
};
use crate::error::{Error, Result};
use crate::model::{close_loop, Controller, Plant, STRICTLY_PROPER_TOL};
use crate::numerics::{
    block, determinant, inverse, max_abs, max_eig_sym, min_eig_sym, norm2, sigma_min, solve, Mat,
    SymMatrix, Tolerances,
};

/// A point of `F_γ`: the lifted variables without the factorization of
/// `I − YX`.
#[derive(Debug, Clone, PartialEq)]
pub struct FPoint {
    pub x: SymMatrix,
    pub y: SymMatrix,
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub c_hat: Mat,
    pub d_hat: Mat,
}

/// A point of `G_γ`: an [`FPoint`] plus an invertible factorization
/// `Ξ Π = I − Y X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub x: SymMatrix,
    pub y: SymMatrix,
    pub a_hat: Mat,
    pub b_hat: Mat,
    pub c_hat: Mat,
    pub d_hat: Mat,
    pub pi: Mat,
    pub xi: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentSign {
    Plus,
    Minus,
}

impl std::fmt::Display for ComponentSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ComponentSign::Plus => "plus",
            ComponentSign::Minus => "minus",
        })
    }
}

impl FPoint {
    pub fn zeros(n_x: usize, n_u: usize, n_y: usize) -> Self {
        Self {
            x: SymMatrix::zeros(n_x),
            y: SymMatrix::zeros(n_x),
            a_hat: Mat::zeros(n_x, n_x),
            b_hat: Mat::zeros(n_x, n_y),
            c_hat: Mat::zeros(n_u, n_x),
            d_hat: Mat::zeros(n_u, n_y),
        }
    }

    /// `(1 − α)·self + α·other`.
    pub fn lerp(&self, other: &FPoint, alpha: f64) -> FPoint {
        let mix = |a: &Mat, b: &Mat| a * (1.0 - alpha) + b * alpha;
        FPoint {
            x: SymMatrix::symmetrize(mix(&self.x, &other.x)),
            y: SymMatrix::symmetrize(mix(&self.y, &other.y)),
            a_hat: mix(&self.a_hat, &other.a_hat),
            b_hat: mix(&self.b_hat, &other.b_hat),
            c_hat: mix(&self.c_hat, &other.c_hat),
            d_hat: mix(&self.d_hat, &other.d_hat),
        }
    }

    /// `[X, I; I, Y]`.
    pub fn coupling_matrix(&self) -> SymMatrix {
        let n = self.x.dim();
        let i = Mat::identity(n, n);
        SymMatrix::symmetrize(block(&[&[self.x.as_mat(), &i], &[&i, self.y.as_mat()]]))
    }

    /// Lifted point with the canonical factorization `Π = I`, `Ξ = I − YX`.
    pub fn canonical_lift(&self) -> LiftedPoint {
        let n = self.x.dim();
        let xi = Mat::identity(n, n) - self.y.as_mat() * self.x.as_mat();
        self.with_factorization(Mat::identity(n, n), xi)
    }

    pub fn with_factorization(&self, pi: Mat, xi: Mat) -> LiftedPoint {
        LiftedPoint {
            x: self.x.clone(),
            y: self.y.clone(),
            a_hat: self.a_hat.clone(),
            b_hat: self.b_hat.clone(),
            c_hat: self.c_hat.clone(),
            d_hat: self.d_hat.clone(),
            pi,
            xi,
        }
    }

    fn check_dims(&self, plant: &Plant) -> Result<()> {
        let d = plant.dims();
        let ok = self.x.dim() == d.n_x
            && self.y.dim() == d.n_x
            && self.a_hat.shape() == (d.n_x, d.n_x)
            && self.b_hat.shape() == (d.n_x, d.n_y)
            && self.c_hat.shape() == (d.n_u, d.n_x)
            && self.d_hat.shape() == (d.n_u, d.n_y);
        if !ok {
            return Err(Error::InvalidInput(format!("lifted variables do not match plant {d:?}")));
        }
        Ok(())
    }
}

impl LiftedPoint {
    pub fn f_point(&self) -> FPoint {
        FPoint {
            x: self.x.clone(),
            y: self.y.clone(),
            a_hat: self.a_hat.clone(),
            b_hat: self.b_hat.clone(),
            c_hat: self.c_hat.clone(),
            d_hat: self.d_hat.clone(),
        }
    }

    /// `‖ΞΠ − (I − YX)‖_max`.
    pub fn coupling_residual(&self) -> f64 {
        let n = self.x.dim();
        let target = Mat::identity(n, n) - self.y.as_mat() * self.x.as_mat();
        max_abs(&(&self.xi * &self.pi - target))
    }

    /// Checks the structural invariants: the coupling identity, `[X, I; I, Y] ≻ 0`
    /// with margin and invertibility of `Π` and `Ξ`.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let n = self.x.dim();
        if self.pi.shape() != (n, n) || self.xi.shape() != (n, n) || self.y.dim() != n {
            return Err(Error::InvariantViolation("Π, Ξ, X, Y must share one size".into()));
        }
        let bound = 1e-9 * (1.0 + max_abs(&self.y) * max_abs(&self.x));
        let res = self.coupling_residual();
        if res > bound {
            return Err(Error::InvariantViolation(format!("ΞΠ ≠ I − YX (residual {res:e})")));
        }
        let c = self.coupling_matrix_margin()?;
        if c <= tol.lmi_margin * lmi_scale(&self.f_point().coupling_matrix()) {
            return Err(Error::InvariantViolation(format!("[X, I; I, Y] is not positive definite ({c:e})")));
        }
        if determinant(&self.pi).abs() <= tol.eig_tol || determinant(&self.xi).abs() <= tol.eig_tol {
            return Err(Error::InvariantViolation("Π or Ξ is singular".into()));
        }
        Ok(())
    }

    fn coupling_matrix_margin(&self) -> Result<f64> {
        min_eig_sym(&self.f_point().coupling_matrix())
    }
}

/// The symmetric matrix `M_γ` with block rows ordered `(x, ξ, w, z)`.
pub fn eval_m_gamma(plant: &Plant, p: &FPoint, gamma: f64) -> Result<SymMatrix> {
    p.check_dims(plant)?;
    let d = plant.dims();
    let (x, y) = (p.x.as_mat(), p.y.as_mat());
    let a = &plant.a;
    let b2c = &plant.b2 * &p.c_hat;
    let bc2 = &p.b_hat * &plant.c2;
    let m11 = a * x + x * a.transpose() + &b2c + b2c.transpose();
    let m12 = p.a_hat.transpose() + a + &plant.b2 * &p.d_hat * &plant.c2;
    let m13 = &plant.b1 + &plant.b2 * &p.d_hat * &plant.d21;
    let m14 = (&plant.c1 * x + &plant.d12 * &p.c_hat).transpose();
    let m22 = a.transpose() * y + y * a + &bc2 + bc2.transpose();
    let m23 = y * &plant.b1 + &p.b_hat * &plant.d21;
    let m24 = (&plant.c1 + &plant.d12 * &p.d_hat * &plant.c2).transpose();
    let m33 = Mat::identity(d.n_w, d.n_w) * -gamma;
    let m34 = (&plant.d11 + &plant.d12 * &p.d_hat * &plant.d21).transpose();
    let m44 = Mat::identity(d.n_z, d.n_z) * -gamma;
    let m = block(&[
        &[&m11, &m12, &m13, &m14],
        &[&m12.transpose(), &m22, &m23, &m24],
        &[&m13.transpose(), &m23.transpose(), &m33, &m34],
        &[&m14.transpose(), &m24.transpose(), &m34.transpose(), &m44],
    ]);
    Ok(SymMatrix::symmetrize(m))
}

/// Margins `(λ_min([X, I; I, Y]), λ_max(M_γ))` of an [`FPoint`].
pub fn f_gamma_margins(plant: &Plant, p: &FPoint, gamma: f64) -> Result<(f64, f64)> {
    let m = eval_m_gamma(plant, p, gamma)?;
    Ok((min_eig_sym(&p.coupling_matrix())?, max_eig_sym(&m)?))
}

/// Membership in `F_γ`, or in its strictly proper subset when requested.
pub fn in_f_gamma(plant: &Plant, p: &FPoint, gamma: f64, strictly_proper: bool, tol: &Tolerances) -> Result<bool> {
    if strictly_proper && max_abs(&p.d_hat) > STRICTLY_PROPER_TOL {
        return Ok(false);
    }
    let m = eval_m_gamma(plant, p, gamma)?;
    let c = p.coupling_matrix();
    Ok(min_eig_sym(&c)? > tol.lmi_margin * lmi_scale(&c) && max_eig_sym(&m)? < -tol.lmi_margin * lmi_scale(&m))
}

/// Change of variables for a controller and a closed-loop certificate `P`:
/// `P = [Y, Ξ; Ξᵀ, ·]`, `P⁻¹ = [X, Πᵀ; Π, ·]` and
/// `Â = Y(A + B₂D_KC₂)X + ΞB_KC₂X + YB₂C_KΠ + ΞA_KΠ`, `B̂ = YB₂D_K + ΞB_K`,
/// `Ĉ = D_KC₂X + C_KΠ`, `D̂ = D_K`.
pub fn change_of_variables(plant: &Plant, k: &Controller, p: &SymMatrix) -> Result<LiftedPoint> {
    let n = plant.dims().n_x;
    if p.dim() != 2 * n {
        return Err(Error::InvalidInput(format!("certificate must be {0}x{0}", 2 * n)));
    }
    let y = p.view((0, 0), (n, n)).into_owned();
    let xi = p.view((0, n), (n, n)).into_owned();
    let p_inv = inverse(p.as_mat())?;
    let x = p_inv.view((0, 0), (n, n)).into_owned();
    let pi = p_inv.view((n, 0), (n, n)).into_owned();
    let (a, b2, c2) = (&plant.a, &plant.b2, &plant.c2);
    let a_hat = &y * (a + b2 * &k.d_k * c2) * &x
        + &xi * &k.b_k * c2 * &x
        + &y * b2 * &k.c_k * &pi
        + &xi * &k.a_k * &pi;
    let b_hat = &y * b2 * &k.d_k + &xi * &k.b_k;
    let c_hat = &k.d_k * c2 * &x + &k.c_k * &pi;
    Ok(LiftedPoint {
        x: SymMatrix::symmetrize(x),
        y: SymMatrix::symmetrize(y),
        a_hat,
        b_hat,
        c_hat,
        d_hat: k.d_k.clone(),
        pi,
        xi,
    })
}

const PERTURBATION_DRAWS: usize = 20;

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// Lifts with a caller-supplied certificate `P` (`P ≻ 0`, bounded-real
/// matrix `≺ 0` at `γ`). A nearly singular `Ξ` is repaired by the
/// perturbation `P + δ[0, E; Eᵀ, 0]` with random orthogonal `E`.
pub fn lift_with_p(
    plant: &Plant,
    k: &Controller,
    p: &SymMatrix,
    gamma: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<LiftedPoint> {
    let n = plant.dims().n_x;
    let cl = close_loop(plant, k)?;
    let xi_ok = |p: &SymMatrix| sigma_min(&p.view((0, n), (n, n)).into_owned()) >= tol.eig_tol * norm2(p).max(1.0);
    let certified = |p: &SymMatrix| -> Result<bool> {
        let m = bounded_real_matrix(p, &cl, gamma)?;
        Ok(max_eig_sym(&m)? <= -tol.lmi_margin * lmi_scale(&m)
            && min_eig_sym(p)? >= tol.lmi_margin * lmi_scale(p))
    };
    let mut p_use = p.clone();
    if !xi_ok(&p_use) {
        let m = bounded_real_matrix(p, &cl, gamma)?;
        let margin = -max_eig_sym(&m)?;
        let spread = 2.0 * norm2(&cl.a) + norm2(&cl.b) + 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found = None;
        'draws: for _ in 0..PERTURBATION_DRAWS {
            let e = random_orthogonal(n, &mut rng);
            let mut offset = Mat::zeros(2 * n, 2 * n);
            offset.view_mut((0, n), (n, n)).copy_from(&e);
            offset.view_mut((n, 0), (n, n)).copy_from(&e.transpose());
            let mut delta = 0.5 * margin.max(0.0) / spread;
            delta = delta.min(0.5 * min_eig_sym(p)?.max(0.0));
            for _ in 0..40 {
                let cand = SymMatrix::symmetrize(p.as_mat() + &offset * delta);
                if xi_ok(&cand) && certified(&cand)? {
                    found = Some(cand);
                    break 'draws;
                }
                delta *= 0.5;
            }
        }
        p_use = found.ok_or_else(|| Error::LiftFailure("Ξ stays singular under perturbation".into()))?;
    }
    change_of_variables(plant, k, &p_use)
}

fn hinf_lift_score(plant: &Plant, z: &LiftedPoint, gamma: f64) -> Result<f64> {
    let f = z.f_point();
    let m = eval_m_gamma(plant, &f, gamma)?;
    let c = f.coupling_matrix();
    Ok((min_eig_sym(&c)? / lmi_scale(&c)).min(-max_eig_sym(&m)? / lmi_scale(&m)))
}

/// Lifts `K ∈ K_γ` through its bounded-real certificate. When the lifted
/// point misses the strict margins, other certificates of the closed loop
/// are tried and the best lifted point is kept.
pub fn lift(plant: &Plant, k: &Controller, gamma: f64, seed: u64, tol: &Tolerances) -> Result<LiftedPoint> {
    let cert = bounded_real_certificate(plant, k, gamma, tol)?;
    let first = lift_with_p(plant, k, &cert.p, gamma, seed, tol);
    if let Ok(z) = &first {
        if hinf_lift_score(plant, z, gamma)? > tol.lmi_margin {
            return first;
        }
    }
    let cl = close_loop(plant, k)?;
    let mut best: Option<(f64, LiftedPoint)> = None;
    for p in bounded_real_family(&cl, gamma, tol)? {
        let Ok(z) = lift_with_p(plant, k, &p, gamma, seed, tol) else { continue };
        let score = hinf_lift_score(plant, &z, gamma)?;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, z));
        }
    }
    match best {
        Some((score, z)) if score > tol.lmi_margin => Ok(z),
        _ => Err(Error::LiftFailure(format!("no certificate yields a strictly feasible lifted point at γ = {gamma}"))),
    }
}

fn h2_lift_score(plant: &Plant, z: &LiftedPoint, gamma_mat: &SymMatrix) -> Result<f64> {
    let f = z.f_point();
    let (first, second, _) = eval_m_lqg(plant, &f, gamma_mat)?;
    let c = f.coupling_matrix();
    Ok((min_eig_sym(&c)? / lmi_scale(&c))
        .min(-max_eig_sym(&first)? / lmi_scale(&first))
        .min(min_eig_sym(&second)? / lmi_scale(&second)))
}

fn lift_h2_with(plant: &Plant, k: &Controller, cert: &H2Certificate, seed: u64, tol: &Tolerances) -> Result<LiftedPoint> {
    let n = plant.dims().n_x;
    let mut p = cert.p.clone();
    if sigma_min(&p.view((0, n), (n, n)).into_owned()) < tol.eig_tol * norm2(&p).max(1.0) {
        let cl = close_loop(plant, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found = None;
        'draws: for _ in 0..PERTURBATION_DRAWS {
            let e = random_orthogonal(n, &mut rng);
            let mut offset = Mat::zeros(2 * n, 2 * n);
            offset.view_mut((0, n), (n, n)).copy_from(&e);
            offset.view_mut((n, 0), (n, n)).copy_from(&e.transpose());
            let mut delta = 0.5 * cert.lmi_margin_achieved.min(cert.pos_def_margin)
                / (2.0 * norm2(&cl.a) + norm2(&cl.b) + 1.0);
            for _ in 0..40 {
                let cand = SymMatrix::symmetrize(p.as_mat() + &offset * delta);
                let (l1, l2, _) = crate::certify::verify_h2(&cand, &cert.gamma_mat, &cl)?;
                let xi_ok =
                    sigma_min(&cand.view((0, n), (n, n)).into_owned()) >= tol.eig_tol * norm2(&cand).max(1.0);
                if xi_ok && l1 < 0.0 && l2 > 0.0 {
                    found = Some(cand);
                    break 'draws;
                }
                delta *= 0.5;
            }
        }
        p = found.ok_or_else(|| Error::LiftFailure("Ξ stays singular under perturbation".into()))?;
    }
    change_of_variables(plant, k, &p)
}

/// Lifts `K ∈ L_γ` through its H2 certificate, returning the point and `Γ`.
pub fn lift_h2(
    plant: &Plant,
    k: &Controller,
    gamma: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<(LiftedPoint, SymMatrix)> {
    let cert = h2_certificate(plant, k, gamma, tol)?;
    if let Ok(z) = lift_h2_with(plant, k, &cert, seed, tol) {
        if h2_lift_score(plant, &z, &cert.gamma_mat)? > tol.lmi_margin {
            return Ok((z, cert.gamma_mat));
        }
    }
    let cl = close_loop(plant, k)?;
    let mut best: Option<(f64, LiftedPoint, SymMatrix)> = None;
    for c in h2_certificate_family(&cl, gamma, tol)? {
        let Ok(z) = lift_h2_with(plant, k, &c, seed, tol) else { continue };
        let score = h2_lift_score(plant, &z, &c.gamma_mat)?;
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, z, c.gamma_mat));
        }
    }
    match best {
        Some((score, z, g)) if score > tol.lmi_margin => Ok((z, g)),
        _ => Err(Error::LiftFailure(format!("no H2 certificate yields a strictly feasible lifted point at γ = {gamma}"))),
    }
}

/// `Φ(Z) = [I, 0; YB₂, Ξ]⁻¹ [D̂, Ĉ; B̂, Â − YAX] [I, C₂X; 0, Π]⁻¹`, by block
/// substitution.
pub fn reconstruct(plant: &Plant, z: &LiftedPoint) -> Result<Controller> {
    z.f_point().check_dims(plant)?;
    let d = plant.dims();
    if z.pi.shape() != (d.n_x, d.n_x) || z.xi.shape() != (d.n_x, d.n_x) {
        return Err(Error::InvalidInput("Π and Ξ must be n_x×n_x".into()));
    }
    let (x, y) = (z.x.as_mat(), z.y.as_mat());
    let yb2 = y * &plant.b2;
    let c2x = &plant.c2 * x;
    // Left factor.
    let top_left = z.d_hat.clone();
    let top_right = z.c_hat.clone();
    let bot_left = solve(&z.xi, &(&z.b_hat - &yb2 * &top_left))?;
    let bot_right = solve(&z.xi, &(&z.a_hat - y * &plant.a * x - &yb2 * &top_right))?;
    // Right factor.
    let d_k = top_left;
    let b_k = bot_left;
    let pi_t = z.pi.transpose();
    let c_k = solve(&pi_t, &(top_right - &d_k * &c2x).transpose())?.transpose();
    let a_k = solve(&pi_t, &(bot_right - &b_k * &c2x).transpose())?.transpose();
    Controller::new(a_k, b_k, c_k, d_k)
}

/// Connected component of `G_γ` containing `Z`: the sign of `det Π`.
pub fn component_sign(z: &LiftedPoint, tol: &Tolerances) -> Result<ComponentSign> {
    let det = determinant(&z.pi);
    if det.abs() <= tol.eig_tol {
        return Err(Error::InvariantViolation(format!("Π is singular (det {det:e})")));
    }
    Ok(if det > 0.0 { ComponentSign::Plus } else { ComponentSign::Minus })
}

/// `Π ← TΠ`, `Ξ ← ΞT⁻¹`; the lifted image of the controller similarity `T`.
pub fn transform_lifted(z: &LiftedPoint, t: &Mat, tol: &Tolerances) -> Result<LiftedPoint> {
    let n = z.x.dim();
    if t.shape() != (n, n) {
        return Err(Error::InvalidInput(format!("transform must be {n}x{n}")));
    }
    let det = determinant(t);
    if det.abs() <= tol.eig_tol {
        return Err(Error::SingularInput(format!("transform is singular (det {det:e})")));
    }
    let mut out = z.clone();
    out.pi = t * &z.pi;
    out.xi = solve(&t.transpose(), &z.xi.transpose())?.transpose();
    Ok(out)
}

/// The two H2 blocks and `trace Γ` at a point with `D̂ = 0`:
/// `[M₁₁, Âᵀ + A, B₁; ·, M₂₂, YB₁ + B̂D₂₁; ·, ·, −I]` and
/// `[X, I, (C₁X + D₁₂Ĉ)ᵀ; I, Y, C₁ᵀ; ·, ·, Γ]`.
pub fn eval_m_lqg(plant: &Plant, p: &FPoint, gamma_mat: &SymMatrix) -> Result<(SymMatrix, SymMatrix, f64)> {
    p.check_dims(plant)?;
    if max_abs(&p.d_hat) > STRICTLY_PROPER_TOL {
        return Err(Error::InvalidInput("H2 blocks need D̂ = 0".into()));
    }
    let d = plant.dims();
    if gamma_mat.dim() != d.n_z {
        return Err(Error::InvalidInput(format!("Γ must be {0}x{0}", d.n_z)));
    }
    let (x, y) = (p.x.as_mat(), p.y.as_mat());
    let a = &plant.a;
    let b2c = &plant.b2 * &p.c_hat;
    let bc2 = &p.b_hat * &plant.c2;
    let m11 = a * x + x * a.transpose() + &b2c + b2c.transpose();
    let m12 = p.a_hat.transpose() + a;
    let m22 = a.transpose() * y + y * a + &bc2 + bc2.transpose();
    let m23 = y * &plant.b1 + &p.b_hat * &plant.d21;
    let first = block(&[
        &[&m11, &m12, &plant.b1],
        &[&m12.transpose(), &m22, &m23],
        &[&plant.b1.transpose(), &m23.transpose(), &(-Mat::identity(d.n_w, d.n_w))],
    ]);
    let n = d.n_x;
    let i = Mat::identity(n, n);
    let cx = &plant.c1 * x + &plant.d12 * &p.c_hat;
    let second = block(&[
        &[x, &i, &cx.transpose()],
        &[&i, y, &plant.c1.transpose()],
        &[&cx, &plant.c1, gamma_mat.as_mat()],
    ]);
    Ok((SymMatrix::symmetrize(first), SymMatrix::symmetrize(second), gamma_mat.trace()))
}

/// Membership in the lifted H2 feasible set with margins.
pub fn in_lifted_lgamma(
    plant: &Plant,
    p: &FPoint,
    gamma_mat: &SymMatrix,
    gamma: f64,
    tol: &Tolerances,
) -> Result<bool> {
    let (first, second, tr) = eval_m_lqg(plant, p, gamma_mat)?;
    Ok(max_eig_sym(&first)? < -tol.lmi_margin * lmi_scale(&first)
        && min_eig_sym(&second)? > tol.lmi_margin * lmi_scale(&second)
        && tr < gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::in_kgamma;
    use crate::model::similarity_transform;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn k1() -> Controller {
        Controller::scalar(0.0, 2.0, -2.0, -2.0)
    }

    #[test]
    fn zero_point_blocks() {
        let plant = Plant::scalar_example(1.0);
        let m = eval_m_gamma(&plant, &FPoint::zeros(1, 1, 1), 1.0).unwrap();
        let expect = Mat::from_row_slice(
            4,
            4,
            &[0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
        );
        assert_eq!(m.as_mat(), &expect);
        assert!(!in_f_gamma(&plant, &FPoint::zeros(1, 1, 1), 1.0, false, &tol()).unwrap());
    }

    #[test]
    fn example_one_lift_round_trip() {
        let plant = Plant::scalar_example(1.0);
        let z = lift(&plant, &k1(), 3.33, 0, &tol()).unwrap();
        assert!(z.coupling_residual() <= 1e-9);
        z.validate(&tol()).unwrap();
        assert!(in_f_gamma(&plant, &z.f_point(), 3.33, true, &tol()).unwrap());
        assert_eq!(z.d_hat, Mat::zeros(1, 1));
        let back = reconstruct(&plant, &z).unwrap();
        assert!(back.relative_error(&k1()) <= 1e-8);
    }

    #[test]
    fn congruence_with_bounded_real_matrix() {
        let plant = Plant::scalar_example(1.0);
        let cert = bounded_real_certificate(&plant, &k1(), 3.33, &tol()).unwrap();
        let z = change_of_variables(&plant, &k1(), &cert.p).unwrap();
        let cl = close_loop(&plant, &k1()).unwrap();
        let brl = bounded_real_matrix(&cert.p, &cl, 3.33).unwrap();
        let t = block(&[&[z.x.as_mat(), &Mat::identity(1, 1)], &[&z.pi, &Mat::zeros(1, 1)]]);
        let s = crate::numerics::block_diag(&[&t, &Mat::identity(2, 2)]);
        let lhs = s.transpose() * brl.as_mat() * &s;
        let m = eval_m_gamma(&plant, &z.f_point(), 3.33).unwrap();
        assert!(max_abs(&(lhs - m.as_mat())) <= 1e-8 * (1.0 + max_abs(&m)));
    }

    #[test]
    fn scalar_hand_expansion_of_phi() {
        let plant = Plant::scalar_example(0.0);
        let z = LiftedPoint {
            x: SymMatrix::new(Mat::from_element(1, 1, 2.0)).unwrap(),
            y: SymMatrix::new(Mat::from_element(1, 1, 2.0)).unwrap(),
            a_hat: Mat::zeros(1, 1),
            b_hat: Mat::zeros(1, 1),
            c_hat: Mat::zeros(1, 1),
            d_hat: Mat::zeros(1, 1),
            pi: Mat::identity(1, 1),
            xi: Mat::from_element(1, 1, -3.0),
        };
        let k = reconstruct(&plant, &z).unwrap();
        // [1, 0; 2, −3]⁻¹ [0, 0; 0, 0] [1, 2; 0, 1]⁻¹ with A = 0.
        assert_eq!(k.d_k[(0, 0)], 0.0);
        assert_eq!(k.c_k[(0, 0)], 0.0);
        assert_eq!(k.b_k[(0, 0)], 0.0);
        assert_eq!(k.a_k[(0, 0)], 0.0);
        let mut z2 = z.clone();
        z2.a_hat = Mat::from_element(1, 1, 6.0);
        z2.c_hat = Mat::from_element(1, 1, 1.0);
        let k = reconstruct(&plant, &z2).unwrap();
        // W = [0, 1; 0, (6 − 2·1)/(−3)], then K = W·[1, −2; 0, 1].
        assert!((k.c_k[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((k.a_k[(0, 0)] + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.b_k[(0, 0)], 0.0);
    }

    #[test]
    fn signs_and_transforms() {
        let mut z = lift(&Plant::scalar_example(1.0), &k1(), 3.33, 0, &tol()).unwrap();
        let sign = component_sign(&z, &tol()).unwrap();
        let flipped = transform_lifted(&z, &Mat::from_element(1, 1, -1.0), &tol()).unwrap();
        assert_ne!(component_sign(&flipped, &tol()).unwrap(), sign);
        let same = transform_lifted(&z, &Mat::identity(1, 1), &tol()).unwrap();
        assert_eq!(same, z);
        z.pi = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0]));
        assert_eq!(component_sign(&z, &tol()).unwrap(), ComponentSign::Minus);
    }

    #[test]
    fn transform_commutes_with_phi() {
        let plant = Plant::scalar_example(1.0);
        let z = lift(&plant, &k1(), 3.33, 0, &tol()).unwrap();
        let t = Mat::from_element(1, 1, -2.5);
        let lhs = reconstruct(&plant, &transform_lifted(&z, &t, &tol()).unwrap()).unwrap();
        let rhs = similarity_transform(&reconstruct(&plant, &z).unwrap(), &t, &tol()).unwrap();
        assert!(lhs.relative_error(&rhs) <= 1e-8);
    }

    #[test]
    fn lifted_minus_component_from_flipped_controller() {
        let plant = Plant::scalar_example(1.0);
        let z = lift(&plant, &k1(), 3.33, 0, &tol()).unwrap();
        let kf = similarity_transform(&k1(), &Mat::from_element(1, 1, -1.0), &tol()).unwrap();
        let zf = lift(&plant, &kf, 3.33, 0, &tol()).unwrap();
        assert_ne!(component_sign(&z, &tol()).unwrap(), component_sign(&zf, &tol()).unwrap());
    }

    #[test]
    fn canonical_lift_reconstructs_a_member() {
        let plant = Plant::scalar_example(1.0);
        let z = lift(&plant, &k1(), 3.33, 0, &tol()).unwrap();
        let canon = z.f_point().canonical_lift();
        assert_eq!(component_sign(&canon, &tol()).unwrap(), ComponentSign::Plus);
        let k = reconstruct(&plant, &canon).unwrap();
        assert!(in_kgamma(&plant, &k, 3.33, false, &tol()).unwrap());
    }

    #[test]
    fn lqg_zero_point_blocks() {
        let plant = Plant::scalar_example(1.0);
        let (b1, b2, tr) =
            eval_m_lqg(&plant, &FPoint::zeros(1, 1, 1), &SymMatrix::identity(1)).unwrap();
        assert_eq!(b1.as_mat(), &Mat::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0]));
        assert_eq!(b2.as_mat(), &Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]));
        assert_eq!(tr, 1.0);
        let mut p = FPoint::zeros(1, 1, 1);
        p.d_hat[(0, 0)] = 1.0;
        assert!(eval_m_lqg(&plant, &p, &SymMatrix::identity(1)).is_err());
    }

    #[test]
    fn h2_lift_round_trip() {
        let one = Mat::from_element(1, 1, 1.0);
        let plant =
            crate::model::lqg_plant(&one, &one, &one, &crate::model::LqgWeights::identity(1, 1, 1), &tol()).unwrap();
        let k = Controller::scalar(0.0, -2.0, 2.0, -2.0);
        let h2 = crate::analysis::h2_norm_squared(&close_loop(&plant, &k).unwrap(), &tol()).unwrap();
        let (z, gm) = lift_h2(&plant, &k, 2.0 * h2, 0, &tol()).unwrap();
        assert_eq!(z.d_hat, Mat::zeros(1, 1));
        assert!(z.coupling_residual() <= 1e-9);
        let (b1, b2, tr) = eval_m_lqg(&plant, &z.f_point(), &gm).unwrap();
        assert!(max_eig_sym(&b1).unwrap() < 0.0 && min_eig_sym(&b2).unwrap() > 0.0 && tr < 2.0 * h2);
        assert!(reconstruct(&plant, &z).unwrap().relative_error(&k) <= 1e-8);
    }

    #[test]
    fn decoupled_state_needs_perturbation() {
        let plant = Plant::new(
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, -1.0]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::zeros(1, 1),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
        )
        .unwrap();
        let k = crate::model::augment_reduced(&k1(), -1.0).unwrap();
        let cl = close_loop(&plant, &k).unwrap();
        let gamma = 1.2 * crate::analysis::hinf_norm(&cl, &tol()).unwrap().hi;
        let cert = bounded_real_certificate(&plant, &k, gamma, &tol()).unwrap();
        let xi = cert.p.view((0, 2), (2, 2)).into_owned();
        assert!(sigma_min(&xi) < 1e-9 * norm2(&cert.p));
        let z = lift(&plant, &k, gamma, 7, &tol()).unwrap();
        z.validate(&tol()).unwrap();
        assert!(in_f_gamma(&plant, &z.f_point(), gamma, false, &tol()).unwrap());
        assert!(reconstruct(&plant, &z).unwrap().relative_error(&k) <= 1e-8);
    }
}
