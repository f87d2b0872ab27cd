use super::{ensure_finite, ensure_square, max_abs, spectral_abscissa, Mat, RealSchur, SymMatrix};
use crate::error::{Error, Result};

/// Solves `AᵀP + PA + Q = 0` for Hurwitz `A` (Bartels–Stewart on the real
/// Schur form of `A`).
pub fn solve_lyapunov(a: &Mat, q: &SymMatrix, stability_margin: f64) -> Result<SymMatrix> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(q, "Q")?;
    let n = a.nrows();
    if q.dim() != n {
        return Err(Error::InvalidInput(format!(
            "Lyapunov: A is {n}x{n} but Q is {0}x{0}",
            q.dim()
        )));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= -stability_margin {
        return Err(Error::PreconditionViolation(format!(
            "Lyapunov: A is not Hurwitz (spectral abscissa {abscissa:e})"
        )));
    }
    let schur = RealSchur::new(a)?;
    let (u, t) = (&schur.q, &schur.t);
    // Tᵀ X + X T = −Uᵀ Q U, with X = Uᵀ P U.
    let c = -(u.transpose() * q.as_mat() * u);
    let blocks = schur.blocks();
    let mut x = Mat::zeros(n, n);
    for (jb, bj) in blocks.iter().enumerate() {
        for (ib, bi) in blocks.iter().enumerate() {
            let (i0, p) = (bi.start, bi.size);
            let (j0, r) = (bj.start, bj.size);
            let mut rhs = c.view((i0, j0), (p, r)).into_owned();
            for bk in &blocks[..ib] {
                rhs -= t.view((bk.start, i0), (bk.size, p)).transpose()
                    * x.view((bk.start, j0), (bk.size, r));
            }
            for bk in &blocks[..jb] {
                rhs -= x.view((i0, bk.start), (p, bk.size)) * t.view((bk.start, j0), (bk.size, r));
            }
            let tii = t.view((i0, i0), (p, p)).into_owned();
            let tjj = t.view((j0, j0), (r, r)).into_owned();
            let sol = small_sylvester(&tii.transpose(), &tjj, &rhs)?;
            x.view_mut((i0, j0), (p, r)).copy_from(&sol);
        }
    }
    let p = u * x * u.transpose();
    let p = SymMatrix::symmetrize(p);
    let residual = max_abs(&(a.transpose() * p.as_mat() + p.as_mat() * a + q.as_mat()));
    if !residual.is_finite() {
        return Err(Error::NumericalFailure("Lyapunov solution is not finite".into()));
    }
    Ok(p)
}

/// Solves `L X + X R = C` for blocks of size at most 2 via the Kronecker form.
fn small_sylvester(l: &Mat, r: &Mat, c: &Mat) -> Result<Mat> {
    let (p, q) = (l.nrows(), r.nrows());
    let mut k = Mat::zeros(p * q, p * q);
    let mut rhs = Mat::zeros(p * q, 1);
    for col in 0..q {
        for i in 0..p {
            let row = i + col * p;
            rhs[(row, 0)] = c[(i, col)];
            for m in 0..p {
                k[(row, m + col * p)] += l[(i, m)];
            }
            for m in 0..q {
                k[(row, i + m * p)] += r[(m, col)];
            }
        }
    }
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("Sylvester block is singular".into()))?;
    Ok(Mat::from_fn(p, q, |i, j| sol[(i + j * p, 0)]))
}
