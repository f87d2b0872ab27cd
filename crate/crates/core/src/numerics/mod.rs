//! Dense linear-algebra kernels: symmetric and general eigenvalues, real
//! Schur with reordering, Lyapunov and Riccati solvers, polar factors and
//! rotation paths.

mod eig;
mod polar;
mod riccati;
mod schur;
mod lyapunov;

pub use eig::{eigenvalues, is_hurwitz, max_eig_sym, min_eig_sym, spectral_abscissa};
pub use lyapunov::solve_lyapunov;
pub use polar::{polar_decompose, special_orthogonal_path};
pub use riccati::{solve_care, solve_riccati};
pub use schur::{RealSchur, SchurBlock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Numerical thresholds used throughout the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eig_tol: f64,
    pub lmi_margin: f64,
    pub bisect_tol: f64,
    pub stability_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eig_tol: 1e-9,
            lmi_margin: 1e-8,
            bisect_tol: 1e-6,
            stability_margin: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eig_tol, self.lmi_margin, self.bisect_tol, self.stability_margin];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("tolerances must be positive: {self:?}")))
        }
    }
}

/// Square real matrix that is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    /// Symmetrizes `m` as (M + Mᵀ)/2.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(m: Mat) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Mat::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

/// Largest absolute entry, 0 for empty matrices.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub(crate) fn ensure_square(m: &Mat, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

/// Smallest singular value.
pub fn sigma_min(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Numerical rank with threshold `rel_tol · σ_max`.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Solves `A X = B` with partial-pivoting LU; errors when `A` is singular.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    ensure_square(a, "coefficient matrix")?;
    a.clone()
        .lu()
        .solve(b)
        .filter(is_finite)
        .ok_or_else(|| Error::SingularInput("linear system is singular".into()))
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    solve(a, &Mat::identity(a.nrows(), a.nrows()))
}

pub fn determinant(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().lu().determinant()
}

/// Assembles a dense matrix from a grid of blocks. Every row of blocks must
/// share heights and every column of blocks must share widths.
pub fn block(rows: &[&[&Mat]]) -> Mat {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut out = Mat::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (i, row) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            debug_assert_eq!(b.nrows(), heights[i], "block row height mismatch");
            debug_assert_eq!(b.ncols(), widths[j], "block column width mismatch");
            out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(*b);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    out
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Principal square root of a symmetric positive semidefinite matrix.
/// Eigenvalues in `[-eig_tol, 0]` are clamped to zero; anything more
/// negative is rejected.
pub fn sqrt_psd(m: &SymMatrix, eig_tol: f64) -> Result<SymMatrix> {
    ensure_finite(m, "matrix")?;
    let eig = m.as_mat().clone().symmetric_eigen();
    let scale = 1.0 + max_abs(m);
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if *v < -eig_tol * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semidefinite (eigenvalue {v:e})"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(SymMatrix::symmetrize(q * Mat::from_diagonal(&d) * q.transpose()))
}
