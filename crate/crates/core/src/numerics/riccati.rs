use super::{
    block, ensure_finite, ensure_square, max_abs, sigma_min, solve, solve_lyapunov,
    spectral_abscissa, Mat, RealSchur, SymMatrix,
};
use crate::error::{Error, Result};

/// Stabilizing solution of `AᵀP + PA − P G P + Q = 0`, i.e. the one making
/// `A − G P` Hurwitz. `G` may be indefinite, which covers the bounded-real
/// Riccati equation as well as the control one.
///
/// The stable invariant subspace of the Hamiltonian `[A, −G; −Q, −Aᵀ]` is
/// extracted from an ordered real Schur form. Eigenvalues within
/// `eig_tol · (1 + ‖H‖)` of the imaginary axis abort with
/// [`Error::NoStabilizingSolution`].
pub fn solve_riccati(a: &Mat, g: &SymMatrix, q: &SymMatrix, eig_tol: f64) -> Result<SymMatrix> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(g, "G")?;
    ensure_finite(q, "Q")?;
    let n = a.nrows();
    if g.dim() != n || q.dim() != n {
        return Err(Error::InvalidInput("Riccati: dimension mismatch".into()));
    }
    let h = block(&[&[a, &(-g.as_mat())], &[&(-q.as_mat()), &(-a.transpose())]]);
    let h_scale = 1.0 + max_abs(&h);
    let mut schur = RealSchur::new(&h)?;
    let axis_tol = eig_tol * h_scale;
    if let Some(ev) = schur.eigenvalues().iter().find(|c| c.re.abs() <= axis_tol) {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian has eigenvalue {ev} on the imaginary axis"
        )));
    }
    let k = schur.reorder(|c| c.re < 0.0)?;
    if k != n {
        return Err(Error::NoStabilizingSolution(format!(
            "stable invariant subspace has dimension {k}, expected {n}"
        )));
    }
    let u1 = schur.q.view((0, 0), (n, n)).into_owned();
    let u2 = schur.q.view((n, 0), (n, n)).into_owned();
    if sigma_min(&u1) < eig_tol {
        return Err(Error::NoStabilizingSolution(
            "stable subspace is not a graph (U1 singular)".into(),
        ));
    }
    // P = U2 U1⁻¹  ⇔  U1ᵀ Pᵀ = U2ᵀ.
    let p = solve(&u1.transpose(), &u2.transpose())?.transpose();
    let mut p = SymMatrix::symmetrize(p);

    // One Newton refinement: (A − GP)ᵀX + X(A − GP) + Q + PGP = 0.
    let res0 = riccati_residual(a, g, q, &p);
    if res0 > 1e-13 * (1.0 + max_abs(&p)).powi(2) {
        let ac = a - g.as_mat() * p.as_mat();
        let rhs = SymMatrix::symmetrize(q.as_mat() + p.as_mat() * g.as_mat() * p.as_mat());
        if let Ok(refined) = solve_lyapunov(&ac, &rhs, 0.0) {
            if riccati_residual(a, g, q, &refined) < res0 {
                p = refined;
            }
        }
    }

    let closed = a - g.as_mat() * p.as_mat();
    if spectral_abscissa(&closed)? >= 0.0 {
        return Err(Error::NoStabilizingSolution(
            "computed solution is not stabilizing".into(),
        ));
    }
    Ok(p)
}

pub(crate) fn riccati_residual(a: &Mat, g: &SymMatrix, q: &SymMatrix, p: &SymMatrix) -> f64 {
    let p = p.as_mat();
    max_abs(&(a.transpose() * p + p * a - p * g.as_mat() * p + q.as_mat()))
}

/// Stabilizing solution of the control Riccati equation
/// `AᵀP + PA − P B R⁻¹ Bᵀ P + Q = 0`.
pub fn solve_care(
    a: &Mat,
    b: &Mat,
    q: &SymMatrix,
    r: &SymMatrix,
    eig_tol: f64,
) -> Result<SymMatrix> {
    ensure_finite(b, "B")?;
    ensure_finite(r, "R")?;
    if b.nrows() != a.nrows() || r.dim() != b.ncols() {
        return Err(Error::InvalidInput("CARE: dimension mismatch".into()));
    }
    if super::min_eig_sym(r)? <= 0.0 {
        return Err(Error::InvalidInput("CARE: R must be positive definite".into()));
    }
    let rinv_bt = solve(r.as_mat(), &b.transpose())?;
    let g = SymMatrix::symmetrize(b * rinv_bt);
    solve_riccati(a, &g, q, eig_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> SymMatrix {
        SymMatrix::new(Mat::from_row_slice(1, 1, &[v])).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let one = Mat::from_row_slice(1, 1, &[1.0]);
        let p = solve_care(&Mat::zeros(1, 1), &one, &s(1.0), &s(1.0), 1e-9).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
        let p = solve_care(
            &Mat::from_row_slice(1, 1, &[-1.0]),
            &Mat::zeros(1, 1),
            &s(3.0),
            &s(1.0),
            1e-9,
        )
        .unwrap();
        assert!((p[(0, 0)] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn unstabilizable_fails() {
        // Unstable mode with zero input matrix.
        let err = solve_care(
            &Mat::from_row_slice(1, 1, &[1.0]),
            &Mat::zeros(1, 1),
            &s(1.0),
            &s(1.0),
            1e-9,
        );
        assert!(matches!(err, Err(Error::NoStabilizingSolution(_))));
        // Imaginary-axis Hamiltonian eigenvalues: A = 0, B = 0, Q = 0.
        let err = solve_care(&Mat::zeros(1, 1), &Mat::zeros(1, 1), &s(0.0), &s(1.0), 1e-9);
        assert!(matches!(err, Err(Error::NoStabilizingSolution(_))));
    }

    #[test]
    fn indefinite_quadratic_term() {
        // Bounded-real type equation for 1/(s+1) at level 2:
        // −2P + P²/4 + 1 = 0, stabilizing root P = 4 − 2√3.
        let p = solve_riccati(
            &Mat::from_row_slice(1, 1, &[-1.0]),
            &s(-0.25),
            &s(1.0),
            1e-9,
        )
        .unwrap();
        assert!((p[(0, 0)] - (4.0 - 2.0 * 3f64.sqrt())).abs() < 1e-13);
    }
}
