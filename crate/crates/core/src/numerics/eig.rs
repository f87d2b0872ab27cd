use nalgebra::Complex;

use super::{ensure_finite, ensure_square, Mat, RealSchur, SymMatrix};
use crate::error::Result;

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym(m: &SymMatrix) -> Result<f64> {
    ensure_finite(m, "symmetric matrix")?;
    Ok(sym_eigenvalues(m.as_mat()).fold(f64::INFINITY, f64::min))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eig_sym(m: &SymMatrix) -> Result<f64> {
    ensure_finite(m, "symmetric matrix")?;
    Ok(sym_eigenvalues(m.as_mat()).fold(f64::NEG_INFINITY, f64::max))
}

fn sym_eigenvalues(m: &Mat) -> impl Iterator<Item = f64> {
    let vals = if m.nrows() == 0 {
        nalgebra::DVector::zeros(0)
    } else {
        m.clone().symmetric_eigenvalues()
    };
    vals.into_iter().copied().collect::<Vec<_>>().into_iter()
}

/// All eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    ensure_square(a, "matrix")?;
    ensure_finite(a, "matrix")?;
    Ok(RealSchur::new(a)?.eigenvalues())
}

/// Largest real part over the spectrum of `a`.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Hurwitz test with a strictness margin: abscissa < −margin.
pub fn is_hurwitz(a: &Mat, margin: f64) -> Result<bool> {
    Ok(spectral_abscissa(a)? < -margin)
}
