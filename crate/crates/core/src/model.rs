//! State-space data model: plants, full-order controllers, closed-loop
//! assembly, similarity transformations and LQG plant construction.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::numerics::{
    block, determinant, eigenvalues, ensure_finite, inverse, max_abs, min_eig_sym, norm2,
    numerical_rank, sqrt_psd, Mat, SymMatrix, Tolerances,
};

pub type CMat = DMatrix<Complex<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantDims {
    pub n_x: usize,
    pub n_w: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub n_z: usize,
}

/// Generalized plant
/// `ẋ = A x + B1 w + B2 u`, `z = C1 x + D11 w + D12 u`, `y = C2 x + D21 w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub a: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d11: Mat,
    pub d12: Mat,
    pub d21: Mat,
    dims: PlantDims,
}

fn expect_shape(m: &Mat, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::InvalidInput(format!(
            "{name} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, name)
}

impl Plant {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Mat,
        b1: Mat,
        b2: Mat,
        c1: Mat,
        c2: Mat,
        d11: Mat,
        d12: Mat,
        d21: Mat,
    ) -> Result<Self> {
        let dims = PlantDims {
            n_x: a.nrows(),
            n_w: b1.ncols(),
            n_u: b2.ncols(),
            n_y: c2.nrows(),
            n_z: c1.nrows(),
        };
        let PlantDims { n_x, n_w, n_u, n_y, n_z } = dims;
        if n_x == 0 || n_w == 0 || n_u == 0 || n_y == 0 || n_z == 0 {
            return Err(Error::InvalidInput(format!("plant dimensions must be positive: {dims:?}")));
        }
        expect_shape(&a, n_x, n_x, "A")?;
        expect_shape(&b1, n_x, n_w, "B1")?;
        expect_shape(&b2, n_x, n_u, "B2")?;
        expect_shape(&c1, n_z, n_x, "C1")?;
        expect_shape(&c2, n_y, n_x, "C2")?;
        expect_shape(&d11, n_z, n_w, "D11")?;
        expect_shape(&d12, n_z, n_u, "D12")?;
        expect_shape(&d21, n_y, n_w, "D21")?;
        Ok(Self { a, b1, b2, c1, c2, d11, d12, d21, dims })
    }

    pub fn dims(&self) -> PlantDims {
        self.dims
    }

    /// Scalar plant with every block equal to one except `D11 = 0`, with the
    /// given state matrix `a`.
    pub fn scalar_example(a: f64) -> Self {
        let one = || Mat::from_element(1, 1, 1.0);
        Self::new(
            Mat::from_element(1, 1, a),
            one(),
            one(),
            one(),
            one(),
            Mat::zeros(1, 1),
            one(),
            one(),
        )
        .expect("scalar example is well formed")
    }

    /// Copy of the plant with a different state matrix.
    pub fn with_a(&self, a: Mat) -> Result<Self> {
        Self::new(
            a,
            self.b1.clone(),
            self.b2.clone(),
            self.c1.clone(),
            self.c2.clone(),
            self.d11.clone(),
            self.d12.clone(),
            self.d21.clone(),
        )
    }
}

/// Full-order dynamic controller `ξ̇ = A_K ξ + B_K y`, `u = C_K ξ + D_K y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub a_k: Mat,
    pub b_k: Mat,
    pub c_k: Mat,
    pub d_k: Mat,
}

impl Controller {
    pub fn new(a_k: Mat, b_k: Mat, c_k: Mat, d_k: Mat) -> Result<Self> {
        let n = a_k.nrows();
        let (n_y, n_u) = (b_k.ncols(), c_k.nrows());
        expect_shape(&a_k, n, n, "A_K")?;
        expect_shape(&b_k, n, n_y, "B_K")?;
        expect_shape(&c_k, n_u, n, "C_K")?;
        expect_shape(&d_k, n_u, n_y, "D_K")?;
        Ok(Self { a_k, b_k, c_k, d_k })
    }

    pub fn zeros(n: usize, n_u: usize, n_y: usize) -> Self {
        Self {
            a_k: Mat::zeros(n, n),
            b_k: Mat::zeros(n, n_y),
            c_k: Mat::zeros(n_u, n),
            d_k: Mat::zeros(n_u, n_y),
        }
    }

    /// Scalar controller from the block matrix `[D_K, C_K; B_K, A_K]`.
    pub fn scalar(d_k: f64, c_k: f64, b_k: f64, a_k: f64) -> Self {
        let s = |v| Mat::from_element(1, 1, v);
        Self { a_k: s(a_k), b_k: s(b_k), c_k: s(c_k), d_k: s(d_k) }
    }

    pub fn order(&self) -> usize {
        self.a_k.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.c_k.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.b_k.ncols()
    }

    /// The block matrix `[D_K, C_K; B_K, A_K]`.
    pub fn as_block(&self) -> Mat {
        block(&[&[&self.d_k, &self.c_k], &[&self.b_k, &self.a_k]])
    }

    pub fn from_block(k: &Mat, n_u: usize, n_y: usize) -> Result<Self> {
        if k.nrows() < n_u || k.ncols() < n_y || k.nrows() - n_u != k.ncols() - n_y {
            return Err(Error::InvalidInput("controller block matrix has wrong shape".into()));
        }
        let n = k.nrows() - n_u;
        Self::new(
            k.view((n_u, n_y), (n, n)).into_owned(),
            k.view((n_u, 0), (n, n_y)).into_owned(),
            k.view((0, n_y), (n_u, n)).into_owned(),
            k.view((0, 0), (n_u, n_y)).into_owned(),
        )
    }

    pub fn is_strictly_proper(&self) -> bool {
        max_abs(&self.d_k) <= STRICTLY_PROPER_TOL
    }

    /// Affine combination `(1 − α)·self + α·other` of the controller blocks.
    pub fn lerp(&self, other: &Controller, alpha: f64) -> Controller {
        Controller {
            a_k: &self.a_k * (1.0 - alpha) + &other.a_k * alpha,
            b_k: &self.b_k * (1.0 - alpha) + &other.b_k * alpha,
            c_k: &self.c_k * (1.0 - alpha) + &other.c_k * alpha,
            d_k: &self.d_k * (1.0 - alpha) + &other.d_k * alpha,
        }
    }

    /// `‖K − reference‖_max / max(1, ‖reference‖_max)` over the block matrix.
    pub fn relative_error(&self, reference: &Controller) -> f64 {
        let r = reference.as_block();
        max_abs(&(self.as_block() - &r)) / max_abs(&r).max(1.0)
    }

    /// Transfer matrix `C_K (sI − A_K)⁻¹ B_K + D_K`.
    pub fn transfer(&self, s: Complex<f64>) -> Result<CMat> {
        transfer_at(&self.a_k, &self.b_k, &self.c_k, &self.d_k, s)
    }

    fn check_against(&self, plant: &Plant) -> Result<()> {
        let d = plant.dims();
        if self.order() != d.n_x || self.n_u() != d.n_u || self.n_y() != d.n_y {
            return Err(Error::InvalidInput(format!(
                "controller (order {}, {} outputs, {} inputs) does not match plant {:?}",
                self.order(),
                self.n_u(),
                self.n_y(),
                d
            )));
        }
        Ok(())
    }
}

/// Absolute threshold on `‖D_K‖_max` below which a controller counts as
/// strictly proper.
pub const STRICTLY_PROPER_TOL: f64 = 1e-12;

/// Closed-loop realization with state `(x, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl ClosedLoop {
    /// Wraps a raw realization; used for analysing systems that do not come
    /// from a plant/controller interconnection.
    pub fn from_parts(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        expect_shape(&a, n, n, "A")?;
        expect_shape(&b, n, b.ncols(), "B")?;
        expect_shape(&c, c.nrows(), n, "C")?;
        expect_shape(&d, c.nrows(), b.ncols(), "D")?;
        Ok(Self { a, b, c, d })
    }

    pub fn transfer(&self, s: Complex<f64>) -> Result<CMat> {
        transfer_at(&self.a, &self.b, &self.c, &self.d, s)
    }
}

/// `C (sI − A)⁻¹ B + D` at a complex frequency.
pub fn transfer_at(a: &Mat, b: &Mat, c: &Mat, d: &Mat, s: Complex<f64>) -> Result<CMat> {
    let n = a.nrows();
    let to_c = |m: &Mat| m.map(|v| Complex::new(v, 0.0));
    let mut resolvent = to_c(a) * Complex::new(-1.0, 0.0);
    for i in 0..n {
        resolvent[(i, i)] += s;
    }
    let x = resolvent
        .lu()
        .solve(&to_c(b))
        .ok_or_else(|| Error::SingularInput(format!("sI − A is singular at s = {s}")))?;
    Ok(to_c(c) * x + to_c(d))
}

/// Interconnects plant and controller.
pub fn close_loop(plant: &Plant, k: &Controller) -> Result<ClosedLoop> {
    k.check_against(plant)?;
    let p = plant;
    let b2dk = &p.b2 * &k.d_k;
    let d12dk = &p.d12 * &k.d_k;
    let a = block(&[
        &[&(&p.a + &b2dk * &p.c2), &(&p.b2 * &k.c_k)],
        &[&(&k.b_k * &p.c2), &k.a_k],
    ]);
    let b = block(&[&[&(&p.b1 + &b2dk * &p.d21)], &[&(&k.b_k * &p.d21)]]);
    let c = block(&[&[&(&p.c1 + &d12dk * &p.c2), &(&p.d12 * &k.c_k)]]);
    let d = &p.d11 + &d12dk * &p.d21;
    Ok(ClosedLoop { a, b, c, d })
}

/// Similarity transformation `(A_K, B_K, C_K, D_K) ↦ (T A_K T⁻¹, T B_K, C_K T⁻¹, D_K)`.
pub fn similarity_transform(k: &Controller, t: &Mat, tol: &Tolerances) -> Result<Controller> {
    let n = k.order();
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::InvalidInput(format!("transform must be {n}x{n}")));
    }
    ensure_finite(t, "T")?;
    let det = determinant(t);
    if det.abs() <= tol.eig_tol {
        return Err(Error::SingularInput(format!("similarity transform is singular (det {det:e})")));
    }
    let t_inv = inverse(t)?;
    Ok(Controller {
        a_k: t * &k.a_k * &t_inv,
        b_k: t * &k.b_k,
        c_k: &k.c_k * &t_inv,
        d_k: k.d_k.clone(),
    })
}

/// PBH verdict for one eigenvalue of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVerdict {
    pub eigenvalue: Complex<f64>,
    /// `Re λ ≥ −stability_margin`; only such modes enter the verdicts.
    pub needs_check: bool,
    pub controllable: bool,
    pub observable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizabilityReport {
    pub modes: Vec<ModeVerdict>,
    pub stabilizable: bool,
    pub detectable: bool,
}

fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex::new(v, 0.0))
}

fn complex_rank(m: &CMat, rel_tol: f64) -> usize {
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

/// PBH rank test of `[A − λI, B]` for one eigenvalue.
fn pbh_full_rank(a: &Mat, b_or_ct: &Mat, lambda: Complex<f64>, rel_tol: f64) -> bool {
    let n = a.nrows();
    let mut shifted = to_complex(a);
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let mut stacked = CMat::zeros(n, n + b_or_ct.ncols());
    stacked.view_mut((0, 0), (n, n)).copy_from(&shifted);
    stacked.view_mut((0, n), (n, b_or_ct.ncols())).copy_from(&to_complex(b_or_ct));
    complex_rank(&stacked, rel_tol) == n
}

/// Stabilizability of `(A, B2)` and detectability of `(C2, A)` by PBH tests
/// on the modes with `Re λ ≥ −stability_margin`.
pub fn check_stabilizable_detectable(plant: &Plant, tol: &Tolerances) -> Result<StabilizabilityReport> {
    let eigs = eigenvalues(&plant.a)?;
    let ct = plant.c2.transpose();
    let at = plant.a.transpose();
    let modes: Vec<ModeVerdict> = eigs
        .into_iter()
        .map(|lambda| {
            let needs_check = lambda.re >= -tol.stability_margin;
            ModeVerdict {
                eigenvalue: lambda,
                needs_check,
                controllable: pbh_full_rank(&plant.a, &plant.b2, lambda, tol.eig_tol),
                observable: pbh_full_rank(&at, &ct, lambda.conj(), tol.eig_tol),
            }
        })
        .collect();
    let stabilizable = modes.iter().filter(|m| m.needs_check).all(|m| m.controllable);
    let detectable = modes.iter().filter(|m| m.needs_check).all(|m| m.observable);
    Ok(StabilizabilityReport { modes, stabilizable, detectable })
}

/// Minimality of a controller realization: `(A_K, B_K)` controllable and
/// `(C_K, A_K)` observable, by PBH tests with threshold
/// `eig_tol · max(1, ‖A_K‖₂)` on the smallest singular value.
pub fn is_minimal(k: &Controller, tol: &Tolerances) -> Result<bool> {
    let n = k.order();
    if n == 0 {
        return Ok(true);
    }
    let thresh = tol.eig_tol * norm2(&k.a_k).max(1.0);
    let smallest = |m: &CMat| -> f64 {
        m.clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    };
    for lambda in eigenvalues(&k.a_k)? {
        let mut shifted = to_complex(&k.a_k);
        for i in 0..n {
            shifted[(i, i)] -= lambda;
        }
        let mut ctrb = CMat::zeros(n, n + k.n_y());
        ctrb.view_mut((0, 0), (n, n)).copy_from(&shifted);
        ctrb.view_mut((0, n), (n, k.n_y())).copy_from(&to_complex(&k.b_k));
        let mut obsv = CMat::zeros(n + k.n_u(), n);
        obsv.view_mut((0, 0), (n, n)).copy_from(&shifted);
        obsv.view_mut((n, 0), (k.n_u(), n)).copy_from(&to_complex(&k.c_k));
        if smallest(&ctrb) <= thresh || smallest(&obsv.adjoint()) <= thresh {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rank of the controllability matrix `[B, AB, …, A^{n−1}B]`.
pub fn controllability_rank(a: &Mat, b: &Mat, rel_tol: f64) -> usize {
    let n = a.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = b.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = a * cur;
    }
    let refs: Vec<&Mat> = blocks.iter().collect();
    numerical_rank(&block(&[refs.as_slice()]), rel_tol)
}

/// Appends a decoupled state with eigenvalue `appended_eig` to a controller
/// of order `n_x − 1`:
/// `K = [D̃, C̃, 0; B̃, Ã, 0; 0, 0, appended_eig]`.
pub fn augment_reduced(k_red: &Controller, appended_eig: f64) -> Result<Controller> {
    if !appended_eig.is_finite() {
        return Err(Error::InvalidInput("appended eigenvalue must be finite".into()));
    }
    let m = k_red.order();
    let n = m + 1;
    let mut a_k = Mat::zeros(n, n);
    a_k.view_mut((0, 0), (m, m)).copy_from(&k_red.a_k);
    a_k[(m, m)] = appended_eig;
    let mut b_k = Mat::zeros(n, k_red.n_y());
    b_k.view_mut((0, 0), (m, k_red.n_y())).copy_from(&k_red.b_k);
    let mut c_k = Mat::zeros(k_red.n_u(), n);
    c_k.view_mut((0, 0), (k_red.n_u(), m)).copy_from(&k_red.c_k);
    Ok(Controller { a_k, b_k, c_k, d_k: k_red.d_k.clone() })
}

/// Reduced controller with the plant's I/O sizes, checked before augmenting.
pub fn augment_reduced_for(plant: &Plant, k_red: &Controller, appended_eig: f64) -> Result<Controller> {
    let d = plant.dims();
    if k_red.order() + 1 != d.n_x || k_red.n_u() != d.n_u || k_red.n_y() != d.n_y {
        return Err(Error::InvalidInput(format!(
            "reduced controller must have order {} and I/O ({}, {})",
            d.n_x - 1,
            d.n_u,
            d.n_y
        )));
    }
    augment_reduced(k_red, appended_eig)
}

/// LQG weights. `W ⪰ 0`, `V ≻ 0`, `Q ⪰ 0`, `R ≻ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqgWeights {
    pub w: SymMatrix,
    pub v: SymMatrix,
    pub q: SymMatrix,
    pub r: SymMatrix,
}

impl LqgWeights {
    pub fn new(w: SymMatrix, v: SymMatrix, q: SymMatrix, r: SymMatrix, tol: &Tolerances) -> Result<Self> {
        let psd = |m: &SymMatrix, name: &str| -> Result<()> {
            if min_eig_sym(m)? < -tol.eig_tol * (1.0 + max_abs(m)) {
                return Err(Error::InvalidInput(format!("{name} must be positive semidefinite")));
            }
            Ok(())
        };
        let pd = |m: &SymMatrix, name: &str| -> Result<()> {
            if min_eig_sym(m)? <= tol.eig_tol * (1.0 + max_abs(m)) {
                return Err(Error::InvalidInput(format!("{name} must be positive definite")));
            }
            Ok(())
        };
        psd(&w, "W")?;
        pd(&v, "V")?;
        psd(&q, "Q")?;
        pd(&r, "R")?;
        Ok(Self { w, v, q, r })
    }

    pub fn identity(n_x: usize, n_u: usize, n_y: usize) -> Self {
        Self {
            w: SymMatrix::identity(n_x),
            v: SymMatrix::identity(n_y),
            q: SymMatrix::identity(n_x),
            r: SymMatrix::identity(n_u),
        }
    }
}

/// Generalized plant whose squared H2 norm is the LQG cost:
/// `B1 = [W^½, 0]`, `C1 = [Q^½; 0]`, `D11 = 0`, `D12 = [0; R^½]`,
/// `D21 = [0, V^½]`.
pub fn lqg_plant(a: &Mat, b: &Mat, c: &Mat, weights: &LqgWeights, tol: &Tolerances) -> Result<Plant> {
    let n_x = a.nrows();
    let n_u = b.ncols();
    let n_y = c.nrows();
    if weights.w.dim() != n_x || weights.q.dim() != n_x || weights.r.dim() != n_u || weights.v.dim() != n_y
    {
        return Err(Error::InvalidInput("LQG weights do not match system dimensions".into()));
    }
    let w_half = sqrt_psd(&weights.w, tol.eig_tol)?.into_mat();
    let v_half = sqrt_psd(&weights.v, tol.eig_tol)?.into_mat();
    let q_half = sqrt_psd(&weights.q, tol.eig_tol)?.into_mat();
    let r_half = sqrt_psd(&weights.r, tol.eig_tol)?.into_mat();
    let b1 = block(&[&[&w_half, &Mat::zeros(n_x, n_y)]]);
    let c1 = block(&[&[&q_half], &[&Mat::zeros(n_u, n_x)]]);
    let d11 = Mat::zeros(n_x + n_u, n_x + n_y);
    let d12 = block(&[&[&Mat::zeros(n_x, n_u)], &[&r_half]]);
    let d21 = block(&[&[&Mat::zeros(n_y, n_x), &v_half]]);
    Plant::new(a.clone(), b1, b.clone(), c1, c.clone(), d11, d12, d21)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn example_closed_loops() {
        let plant = Plant::scalar_example(1.0);
        let k1 = Controller::scalar(0.0, 2.0, -2.0, -2.0);
        let cl = close_loop(&plant, &k1).unwrap();
        assert_eq!(cl.a, Mat::from_row_slice(2, 2, &[1.0, 2.0, -2.0, -2.0]));
        assert_eq!(cl.b, Mat::from_row_slice(2, 1, &[1.0, -2.0]));
        assert_eq!(cl.c, Mat::from_row_slice(1, 2, &[1.0, 2.0]));
        assert_eq!(cl.d, Mat::zeros(1, 1));

        let mid = Controller::scalar(0.0, 0.0, 0.0, -2.0);
        let cl = close_loop(&plant, &mid).unwrap();
        assert_eq!(cl.a, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]));
    }

    #[test]
    fn zero_controller_decouples() {
        let plant = Plant::new(
            Mat::from_row_slice(2, 2, &[0.5, 1.0, -1.0, 0.3]),
            Mat::from_row_slice(2, 1, &[1.0, 2.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            Mat::from_row_slice(1, 1, &[0.7]),
            Mat::from_row_slice(1, 1, &[1.0]),
            Mat::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        let cl = close_loop(&plant, &Controller::zeros(2, 1, 1)).unwrap();
        let mut expect = Mat::zeros(4, 4);
        expect.view_mut((0, 0), (2, 2)).copy_from(&plant.a);
        assert_eq!(cl.a, expect);
        assert_eq!(cl.d, plant.d11);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let plant = Plant::scalar_example(1.0);
        assert!(matches!(
            close_loop(&plant, &Controller::zeros(2, 1, 1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(Plant::new(
            Mat::zeros(2, 2),
            Mat::zeros(2, 1),
            Mat::zeros(1, 1),
            Mat::zeros(1, 2),
            Mat::zeros(1, 2),
            Mat::zeros(1, 1),
            Mat::zeros(1, 1),
            Mat::zeros(1, 1)
        )
        .is_err());
    }

    #[test]
    fn scalar_similarity() {
        let k = Controller::scalar(0.0, 2.0, -2.0, -2.0);
        let same = similarity_transform(&k, &Mat::identity(1, 1), &tol()).unwrap();
        assert_eq!(same, k);
        let flipped = similarity_transform(&k, &Mat::from_element(1, 1, -1.0), &tol()).unwrap();
        assert_eq!(flipped, Controller::scalar(0.0, -2.0, 2.0, -2.0));
        assert!(matches!(
            similarity_transform(&k, &Mat::zeros(1, 1), &tol()),
            Err(Error::SingularInput(_))
        ));
    }

    #[test]
    fn pbh_examples() {
        let r = check_stabilizable_detectable(&Plant::scalar_example(1.0), &tol()).unwrap();
        assert!(r.stabilizable && r.detectable);

        let plant = Plant::new(
            Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            Mat::from_row_slice(2, 1, &[1.0, 1.0]),
            Mat::from_row_slice(2, 1, &[1.0, 0.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Mat::zeros(1, 1),
            Mat::from_element(1, 1, 1.0),
            Mat::from_element(1, 1, 1.0),
        )
        .unwrap();
        let r = check_stabilizable_detectable(&plant, &tol()).unwrap();
        assert!(!r.stabilizable);
        assert!(r.detectable);
        let bad = r.modes.iter().find(|m| !m.controllable).unwrap();
        assert!((bad.eigenvalue.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lqg_blocks() {
        let one = Mat::from_element(1, 1, 1.0);
        let w = LqgWeights::identity(1, 1, 1);
        let p = lqg_plant(&one, &one, &one, &w, &tol()).unwrap();
        assert_eq!(p.b1, Mat::from_row_slice(1, 2, &[1.0, 0.0]));
        assert_eq!(p.c1, Mat::from_row_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(p.d12, Mat::from_row_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(p.d21, Mat::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!(p.d11, Mat::zeros(2, 2));

        let four = SymMatrix::new(Mat::from_element(1, 1, 4.0)).unwrap();
        let w = LqgWeights::new(four, SymMatrix::identity(1), SymMatrix::identity(1), SymMatrix::identity(1), &tol())
            .unwrap();
        let p = lqg_plant(&one, &one, &one, &w, &tol()).unwrap();
        assert!((p.b1[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_weights_are_rejected() {
        let neg = SymMatrix::new(Mat::from_element(1, 1, -1.0)).unwrap();
        let id = SymMatrix::identity(1);
        assert!(LqgWeights::new(neg.clone(), id.clone(), id.clone(), id.clone(), &tol()).is_err());
        assert!(LqgWeights::new(id.clone(), SymMatrix::zeros(1), id.clone(), id, &tol()).is_err());
    }

    #[test]
    fn minimality_examples() {
        assert!(is_minimal(&Controller::scalar(0.0, 2.0, -2.0, -2.0), &tol()).unwrap());
        let aug = augment_reduced(&Controller::scalar(0.0, 1.0, 1.0, -2.0), -1.0).unwrap();
        assert!(!is_minimal(&aug, &tol()).unwrap());
    }

    #[test]
    fn augmentation_layout_and_fixed_point() {
        let aug = augment_reduced(&Controller::scalar(0.0, 1.0, 1.0, -2.0), -1.0).unwrap();
        assert_eq!(aug.a_k, Mat::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -1.0]));
        assert_eq!(aug.b_k, Mat::from_row_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(aug.c_k, Mat::from_row_slice(1, 2, &[1.0, 0.0]));
        assert_eq!(aug.d_k, Mat::zeros(1, 1));
        let t = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let flipped = similarity_transform(&aug, &t, &tol()).unwrap();
        assert_eq!(flipped, aug);
    }

    #[test]
    fn augmentation_checks_dimensions() {
        let plant = Plant::scalar_example(1.0);
        let wrong = Controller::scalar(0.0, 1.0, 1.0, -2.0);
        assert!(matches!(augment_reduced_for(&plant, &wrong, -1.0), Err(Error::InvalidInput(_))));
    }
}
