use super::{determinant, ensure_finite, ensure_square, Mat, RealSchur, SymMatrix};
use crate::error::{Error, Result};

/// Polar factors `M = Q S` with `Q` orthogonal and `S` symmetric positive
/// definite, by the scaled Newton iteration `Q ← (μQ + (μQ)⁻ᵀ)/2` started
/// at `M`, with Frobenius-norm scaling `μ = (‖Q⁻¹‖/‖Q‖)^½`.
/// `S = sym(QᵀM)`.
pub fn polar_decompose(m: &Mat, eig_tol: f64) -> Result<(Mat, SymMatrix)> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let det = determinant(m);
    if det.abs() <= eig_tol {
        return Err(Error::SingularInput(format!(
            "polar decomposition needs an invertible matrix (det {det:e})"
        )));
    }
    let mut q = m.clone();
    let mut converged = false;
    for _ in 0..100 {
        let inv = q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularInput("polar iterate became singular".into()))?;
        let mu = (inv.norm() / q.norm()).sqrt();
        let next = (&q * mu + inv.transpose() / mu) * 0.5;
        let step = (&next - &q).norm();
        q = next;
        if step <= 1e-14 * q.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure("polar iteration did not converge".into()));
    }
    let s = SymMatrix::symmetrize(q.transpose() * m);
    Ok((q, s))
}

const ORTHO_TOL: f64 = 1e-8;

fn check_rotation(q: &Mat, name: &str) -> Result<()> {
    ensure_square(q, name)?;
    ensure_finite(q, name)?;
    let n = q.nrows();
    let defect = (q.transpose() * q - Mat::identity(n, n)).amax();
    if defect > ORTHO_TOL {
        return Err(Error::PreconditionViolation(format!(
            "{name} is not orthogonal (‖QᵀQ − I‖ = {defect:e})"
        )));
    }
    let det = determinant(q);
    if (det - 1.0).abs() > ORTHO_TOL {
        return Err(Error::PreconditionViolation(format!(
            "{name} must have determinant +1, got {det}"
        )));
    }
    Ok(())
}

/// Rotation geodesic `Q(t) = Q0 · exp(t · log(Q0ᵀ Q1))` through the
/// principal logarithm.
///
/// `Q0ᵀQ1` is split into invariant planes from its (block diagonal) real
/// Schur form. Each plane rotates by `t·θ`. Eigenvalues −1 are paired in
/// Schur column order and rotated by `+π`, a fixed branch.
pub fn special_orthogonal_path(q0: &Mat, q1: &Mat, t: f64) -> Result<Mat> {
    check_rotation(q0, "Q0")?;
    check_rotation(q1, "Q1")?;
    if q0.nrows() != q1.nrows() {
        return Err(Error::InvalidInput("rotation path endpoints differ in size".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("path parameter {t} outside [0, 1]")));
    }
    let n = q0.nrows();
    let rel = q0.transpose() * q1;
    let schur = RealSchur::new(&rel)?;
    let v = &schur.q;

    let mut planes: Vec<(usize, usize, f64)> = Vec::new();
    let mut fixed: Vec<usize> = Vec::new();
    let mut flips: Vec<usize> = Vec::new();
    for b in schur.blocks() {
        let s = b.start;
        if b.size == 2 {
            let tt = &schur.t;
            let theta = (0.5 * (tt[(s + 1, s)] - tt[(s, s + 1)]))
                .atan2(0.5 * (tt[(s, s)] + tt[(s + 1, s + 1)]));
            planes.push((s, s + 1, theta));
        } else if schur.t[(s, s)] < 0.0 {
            flips.push(s);
        } else {
            fixed.push(s);
        }
    }
    if flips.len() % 2 == 1 {
        return Err(Error::NumericalFailure(
            "odd number of −1 eigenvalues in a rotation".into(),
        ));
    }
    for pair in flips.chunks(2) {
        planes.push((pair[0], pair[1], std::f64::consts::PI));
    }

    let mut r = Mat::zeros(n, n);
    for &c in &fixed {
        let col = v.column(c);
        r += col * col.transpose();
    }
    for &(a, b, theta) in &planes {
        let (sn, cs) = (t * theta).sin_cos();
        let va = v.column(a);
        let vb = v.column(b);
        // [va vb] · [[c, −s], [s, c]] · [va vb]ᵀ
        r += (va * va.transpose() + vb * vb.transpose()) * cs;
        r += (vb * va.transpose() - va * vb.transpose()) * sn;
    }
    Ok(q0 * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(th: f64) -> Mat {
        Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()])
    }

    #[test]
    fn polar_examples() {
        let (q, s) = polar_decompose(&(Mat::identity(2, 2) * 2.0), 1e-9).unwrap();
        assert!((q - Mat::identity(2, 2)).amax() < 1e-15);
        assert!((s.as_mat() - Mat::identity(2, 2) * 2.0).amax() < 1e-15);

        let r = rot(std::f64::consts::FRAC_PI_3);
        let (q, s) = polar_decompose(&r, 1e-9).unwrap();
        assert!((q - &r).amax() < 1e-14);
        assert!((s.as_mat() - Mat::identity(2, 2)).amax() < 1e-14);

        let m = Mat::from_row_slice(2, 2, &[0.0, -3.0, 2.0, 0.0]);
        let (q, s) = polar_decompose(&m, 1e-9).unwrap();
        assert!((&q * s.as_mat() - &m).amax() < 1e-10);
        assert!((q.transpose() * &q - Mat::identity(2, 2)).amax() < 1e-10);
        assert!(super::super::min_eig_sym(&s).unwrap() > 0.0);
    }

    #[test]
    fn polar_rejects_singular() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(polar_decompose(&m, 1e-9), Err(Error::SingularInput(_))));
    }

    #[test]
    fn rotation_path_examples() {
        let i2 = Mat::identity(2, 2);
        for t in [0.0, 0.3, 1.0] {
            let q = special_orthogonal_path(&i2, &i2, t).unwrap();
            assert!((q - &i2).amax() < 1e-15);
        }
        let th = 1.1;
        let mid = special_orthogonal_path(&i2, &rot(th), 0.5).unwrap();
        assert!((mid - rot(th / 2.0)).amax() < 1e-14);
    }

    #[test]
    fn half_turn_uses_fixed_branch() {
        let i3 = Mat::identity(3, 3);
        let half = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, -1.0]));
        let end = special_orthogonal_path(&i3, &half, 1.0).unwrap();
        assert!((end - &half).amax() < 1e-14);
        let a = special_orthogonal_path(&i3, &half, 0.5).unwrap();
        let b = special_orthogonal_path(&i3, &half, 0.5).unwrap();
        assert_eq!(a, b);
        assert!((a.transpose() * &a - &i3).amax() < 1e-14);
    }

    #[test]
    fn rejects_reflections() {
        let refl = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]));
        assert!(special_orthogonal_path(&Mat::identity(2, 2), &refl, 0.5).is_err());
    }
}
