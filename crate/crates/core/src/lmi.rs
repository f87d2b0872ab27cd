//! Strict feasibility of affine LMI families, controller synthesis from the
//! lifted LMI and bracketing of the optimal H∞ level.

use nalgebra::{DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{in_kgamma, in_lgamma};
use crate::error::{Error, Result};
use crate::liftmap::{eval_m_gamma, eval_m_lqg, in_f_gamma, in_lifted_lgamma, reconstruct, FPoint};
use crate::model::{check_stabilizable_detectable, Controller, Plant};
use crate::numerics::{max_abs, Mat, SymMatrix, Tolerances};

/// One constraint `F₀ + Σ zᵢ Fᵢ ≺ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub name: String,
    pub f0: Mat,
    pub fi: Vec<Mat>,
}

impl LmiConstraint {
    pub fn size(&self) -> usize {
        self.f0.nrows()
    }

    pub fn eval(&self, z: &DVector<f64>) -> Mat {
        let mut m = self.f0.clone();
        for (zi, fi) in z.iter().zip(&self.fi) {
            if *zi != 0.0 {
                m += fi * *zi;
            }
        }
        m
    }
}

/// How the decision vector maps onto lifted variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub strictly_proper: bool,
    /// Size of the symmetric `Γ` block (H2 synthesis only).
    pub n_gamma: Option<usize>,
}

fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn unpack_sym(z: &[f64], n: usize) -> SymMatrix {
    let mut m = Mat::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            m[(i, j)] = z[k];
            m[(j, i)] = z[k];
            k += 1;
        }
    }
    SymMatrix::symmetrize(m)
}

fn pack_sym(m: &Mat, out: &mut Vec<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..=j {
            out.push(0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
}

fn unpack_full(z: &[f64], r: usize, c: usize) -> Mat {
    Mat::from_row_slice(r, c, z)
}

impl VarLayout {
    pub fn dim(&self) -> usize {
        let (n, u, y) = (self.n_x, self.n_u, self.n_y);
        2 * sym_len(n)
            + n * n
            + n * y
            + u * n
            + if self.strictly_proper { 0 } else { u * y }
            + self.n_gamma.map_or(0, sym_len)
    }

    /// Splits `z` into an [`FPoint`] and, for H2 layouts, `Γ`.
    pub fn unpack(&self, z: &DVector<f64>) -> (FPoint, Option<SymMatrix>) {
        let (n, u, y) = (self.n_x, self.n_u, self.n_y);
        let z = z.as_slice();
        let mut at = 0;
        let mut take = |len: usize| {
            let s = &z[at..at + len];
            at += len;
            s
        };
        let x = unpack_sym(take(sym_len(n)), n);
        let yy = unpack_sym(take(sym_len(n)), n);
        let a_hat = unpack_full(take(n * n), n, n);
        let b_hat = unpack_full(take(n * y), n, y);
        let c_hat = unpack_full(take(u * n), u, n);
        let d_hat = if self.strictly_proper { Mat::zeros(u, y) } else { unpack_full(take(u * y), u, y) };
        let gamma = self.n_gamma.map(|g| unpack_sym(take(sym_len(g)), g));
        (FPoint { x, y: yy, a_hat, b_hat, c_hat, d_hat }, gamma)
    }

    pub fn pack(&self, p: &FPoint, gamma: Option<&SymMatrix>) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.dim());
        pack_sym(&p.x, &mut out);
        pack_sym(&p.y, &mut out);
        for m in [&p.a_hat, &p.b_hat, &p.c_hat] {
            for i in 0..m.nrows() {
                out.extend(m.row(i).iter());
            }
        }
        if !self.strictly_proper {
            for i in 0..p.d_hat.nrows() {
                out.extend(p.d_hat.row(i).iter());
            }
        }
        if let (Some(_), Some(g)) = (self.n_gamma, gamma) {
            pack_sym(g, &mut out);
        }
        DVector::from_vec(out)
    }
}

/// Affine LMI family `F_j(z) ≺ 0`, `j = 1..`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLmi {
    pub dim: usize,
    pub constraints: Vec<LmiConstraint>,
    pub layout: Option<VarLayout>,
}

impl AffineLmi {
    pub fn eval(&self, z: &DVector<f64>) -> Vec<Mat> {
        self.constraints.iter().map(|c| c.eval(z)).collect()
    }

    /// `1 + ‖F₀‖_max` per constraint.
    pub fn scales(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| 1.0 + max_abs(&c.f0)).collect()
    }

    /// `max_j λ_max(F_j(z)) / scale_j`.
    pub fn phi(&self, z: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .zip(self.scales())
            .map(|(c, s)| max_eig(&c.eval(z)) / s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn max_eig(m: &Mat) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Builds a constraint from an affine map evaluated at the unit vectors.
fn constraint_from_map(name: &str, dim: usize, f: impl Fn(&DVector<f64>) -> Result<Mat>) -> Result<LmiConstraint> {
    let zero = DVector::zeros(dim);
    let f0 = f(&zero)?;
    let mut fi = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = zero.clone();
        e[i] = 1.0;
        fi.push(f(&e)? - &f0);
    }
    Ok(LmiConstraint { name: name.to_string(), f0, fi })
}

/// The lifted H∞ synthesis LMI: `−[X, I; I, Y] ≺ 0` and `M_γ ≺ 0`, with
/// `D̂` dropped when `strictly_proper`.
pub fn assemble_synthesis_lmi(plant: &Plant, gamma: f64, strictly_proper: bool) -> Result<AffineLmi> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
    }
    let d = plant.dims();
    let layout = VarLayout { n_x: d.n_x, n_u: d.n_u, n_y: d.n_y, strictly_proper, n_gamma: None };
    let dim = layout.dim();
    let coupling = constraint_from_map("coupling", dim, |z| {
        let (p, _) = layout.unpack(z);
        Ok(-p.coupling_matrix().into_mat())
    })?;
    let m = constraint_from_map("m-gamma", dim, |z| {
        let (p, _) = layout.unpack(z);
        Ok(eval_m_gamma(plant, &p, gamma)?.into_mat())
    })?;
    Ok(AffineLmi { dim, constraints: vec![coupling, m], layout: Some(layout) })
}

/// The lifted H2 synthesis LMI: both H2 blocks plus `trace Γ − γ < 0`.
pub fn assemble_h2_synthesis_lmi(plant: &Plant, gamma: f64) -> Result<AffineLmi> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("γ must be positive, got {gamma}")));
    }
    let d = plant.dims();
    let layout = VarLayout { n_x: d.n_x, n_u: d.n_u, n_y: d.n_y, strictly_proper: true, n_gamma: Some(d.n_z) };
    let dim = layout.dim();
    let first = constraint_from_map("h2-dissipation", dim, |z| {
        let (p, g) = layout.unpack(z);
        Ok(eval_m_lqg(plant, &p, g.as_ref().expect("H2 layout has Γ"))?.0.into_mat())
    })?;
    let second = constraint_from_map("h2-output", dim, |z| {
        let (p, g) = layout.unpack(z);
        Ok(-eval_m_lqg(plant, &p, g.as_ref().expect("H2 layout has Γ"))?.1.into_mat())
    })?;
    let trace = constraint_from_map("trace", dim, |z| {
        let (_, g) = layout.unpack(z);
        Ok(Mat::from_element(1, 1, g.expect("H2 layout has Γ").trace() - gamma))
    })?;
    Ok(AffineLmi { dim, constraints: vec![first, second, trace], layout: Some(layout) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    InfeasibleWithinBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Best point found; a strict witness when feasible.
    pub z: DVector<f64>,
    /// `−φ(z)`, positive when feasible.
    pub margin: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Cap on Newton steps.
    pub budget: usize,
    /// Radius of the ball `‖z‖ < radius` that bounds the search.
    pub radius: f64,
    /// Stop once `φ(z) ≤ −depth · lmi_margin`.
    pub depth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { budget: 3000, radius: 1e4, depth: 1e3 }
    }
}

struct Barrier<'a> {
    lmi: &'a AffineLmi,
    scaled: Vec<(Mat, Vec<Mat>)>,
    radius2: f64,
}

impl<'a> Barrier<'a> {
    fn new(lmi: &'a AffineLmi, radius: f64) -> Self {
        let scaled = lmi
            .constraints
            .iter()
            .zip(lmi.scales())
            .map(|(c, s)| (&c.f0 / s, c.fi.iter().map(|f| f / s).collect()))
            .collect();
        Self { lmi, scaled, radius2: radius * radius }
    }

    fn slack(&self, j: usize, z: &DVector<f64>, t: f64) -> Mat {
        let (f0, fi) = &self.scaled[j];
        let mut s = -f0.clone();
        for (zi, f) in z.iter().zip(fi) {
            if *zi != 0.0 {
                s -= f * *zi;
            }
        }
        for i in 0..s.nrows() {
            s[(i, i)] += t;
        }
        s
    }

    /// Barrier value of `(t + η‖z‖²/2)/μ`, or `None` outside the domain.
    fn value(&self, z: &DVector<f64>, t: f64, mu: f64, eta: f64) -> Option<f64> {
        let rho = self.radius2 - z.norm_squared();
        if rho <= 0.0 {
            return None;
        }
        let mut v = (t + 0.5 * eta * z.norm_squared()) / mu - rho.ln();
        for j in 0..self.scaled.len() {
            let chol = self.slack(j, z, t).cholesky()?;
            v -= 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        Some(v)
    }

    /// Gradient and Hessian with respect to `(z, t)`.
    fn derivatives(&self, z: &DVector<f64>, t: f64, mu: f64, eta: f64) -> Option<(DVector<f64>, Mat)> {
        let d = self.lmi.dim;
        let mut g = DVector::zeros(d + 1);
        let mut h = Mat::zeros(d + 1, d + 1);
        g[d] = 1.0 / mu;
        for a in 0..d {
            g[a] = eta * z[a] / mu;
            h[(a, a)] = eta / mu;
        }
        for (j, (_, fi)) in self.scaled.iter().enumerate() {
            let s_inv = self.slack(j, z, t).cholesky()?.inverse();
            // ∂S/∂zᵢ = −Fᵢ, ∂S/∂t = I.
            let mut w: Vec<Mat> = fi.iter().map(|f| -(&s_inv * f)).collect();
            w.push(s_inv.clone());
            for a in 0..=d {
                g[a] -= w[a].trace();
                for b in a..=d {
                    let v = w[a].component_mul(&w[b].transpose()).sum();
                    h[(a, b)] += v;
                    if a != b {
                        h[(b, a)] += v;
                    }
                }
            }
        }
        let rho = self.radius2 - z.norm_squared();
        for a in 0..d {
            g[a] += 2.0 * z[a] / rho;
            h[(a, a)] += 2.0 / rho;
            for b in 0..d {
                h[(a, b)] += 4.0 * z[a] * z[b] / (rho * rho);
            }
        }
        Some((g, h))
    }

    /// Follows the central path of `min t + η‖z‖²/2` from `(z, t)`.
    /// Returns the number of Newton steps taken.
    fn follow(&self, z: &mut DVector<f64>, t: &mut f64, eta: f64, budget: usize) -> usize {
        let d = self.lmi.dim;
        let total: usize = self.lmi.constraints.iter().map(|c| c.size()).sum::<usize>() + 1;
        let mut mu = 1.0;
        let mut steps = 0;
        loop {
            for _ in 0..100 {
                if steps >= budget {
                    return steps;
                }
                steps += 1;
                let Some((g, h)) = self.derivatives(z, *t, mu, eta) else { return steps };
                let Some(dir) = newton_direction(&g, &h) else { return steps };
                let decrement = -g.dot(&dir);
                if !decrement.is_finite() {
                    return steps;
                }
                if decrement < 1e-10 {
                    break;
                }
                let f0 = self.value(z, *t, mu, eta).unwrap_or(f64::INFINITY);
                let mut step = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let zn = &*z + dir.rows(0, d) * step;
                    let tn = *t + dir[d] * step;
                    if let Some(fv) = self.value(&zn, tn, mu, eta) {
                        if fv <= f0 - 0.25 * step * decrement {
                            *z = zn;
                            *t = tn;
                            moved = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if mu * total as f64 <= 1e-9 {
                return steps;
            }
            mu *= 0.2;
        }
    }
}

fn newton_direction(g: &DVector<f64>, h: &Mat) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(-ch.solve(g));
    }
    let eig = SymmetricEigen::new(h.clone());
    let floor = 1e-12 * eig.eigenvalues.amax().max(1e-300);
    let inv = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    let q = &eig.eigenvectors;
    Some(-(q * Mat::from_diagonal(&inv) * q.transpose() * g))
}

/// Minimizes `φ(z) = max_j λ_max(F_j(z)) / scale_j` by barrier path
/// following on `F_j(z) ≺ t·I`, `‖z‖ < radius`.
///
/// The objective carries a proximal term `η‖z‖²/2` with `η` stepped from
/// `10⁻¹` down to `0`; the first minimizer with `φ ≤ −depth · lmi_margin`
/// is returned, which keeps witnesses bounded and well conditioned.
/// Otherwise the first point with `φ ≤ −lmi_margin` counts as feasible.
/// Deterministic given `seed`, which only perturbs the starting point.
pub fn solve_feasibility(
    lmi: &AffineLmi,
    opts: &SolverOptions,
    seed: u64,
    tol: &Tolerances,
) -> Result<FeasibilityResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-3).expect("valid normal");
    let z0 = DVector::from_fn(lmi.dim, |_, _| normal.sample(&mut rng));
    solve_feasibility_from(lmi, &z0, opts, tol)
}

const PROXIMAL_WEIGHTS: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0];

/// As [`solve_feasibility`], started from `z0`.
pub fn solve_feasibility_from(
    lmi: &AffineLmi,
    z0: &DVector<f64>,
    opts: &SolverOptions,
    tol: &Tolerances,
) -> Result<FeasibilityResult> {
    if z0.len() != lmi.dim {
        return Err(Error::InvalidInput(format!("start point has length {}, expected {}", z0.len(), lmi.dim)));
    }
    let barrier = Barrier::new(lmi, opts.radius);
    let mut z = z0.clone();
    if z.norm() >= 0.5 * opts.radius {
        z *= 0.5 * opts.radius / z.norm();
    }
    let target = -opts.depth * tol.lmi_margin;
    let mut iterations = 0;
    let mut best = (lmi.phi(&z), z.clone());
    let mut shallow: Option<(f64, DVector<f64>)> = None;
    for eta in PROXIMAL_WEIGHTS {
        if iterations >= opts.budget {
            break;
        }
        let mut t = lmi.phi(&z).max(-1.0) + 1.0;
        iterations += barrier.follow(&mut z, &mut t, eta, opts.budget - iterations);
        let phi = lmi.phi(&z);
        if phi <= target {
            return Ok(FeasibilityResult { status: FeasibilityStatus::Feasible, z, margin: -phi, iterations });
        }
        if phi <= -tol.lmi_margin && shallow.is_none() {
            shallow = Some((phi, z.clone()));
        }
        if phi < best.0 {
            best = (phi, z.clone());
        }
    }
    if let Some((phi, z)) = shallow {
        return Ok(FeasibilityResult { status: FeasibilityStatus::Feasible, z, margin: -phi, iterations });
    }
    let (phi, z) = best;
    Ok(FeasibilityResult { status: FeasibilityStatus::InfeasibleWithinBudget, z, margin: -phi, iterations })
}

/// Synthesized controller together with the lifted witness it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub controller: Controller,
    pub point: FPoint,
    pub feasibility: FeasibilityResult,
}

/// Solves the lifted LMI at `γ`, factorizes with `Π = I`, `Ξ = I − YX` and
/// reconstructs. The result is verified with the Hamiltonian test.
pub fn synthesize_with(
    plant: &Plant,
    gamma: f64,
    strictly_proper: bool,
    seed: u64,
    opts: &SolverOptions,
    warm: Option<&DVector<f64>>,
    tol: &Tolerances,
) -> Result<Synthesis> {
    let lmi = assemble_synthesis_lmi(plant, gamma, strictly_proper)?;
    let res = match warm {
        Some(z0) => solve_feasibility_from(&lmi, z0, opts, tol)?,
        None => solve_feasibility(&lmi, opts, seed, tol)?,
    };
    if res.status != FeasibilityStatus::Feasible {
        return Err(Error::SynthesisFailure(format!(
            "LMI not feasible within budget at γ = {gamma} (best margin {:e})",
            res.margin
        )));
    }
    let layout = lmi.layout.expect("synthesis LMI has a layout");
    let (point, _) = layout.unpack(&res.z);
    if !in_f_gamma(plant, &point, gamma, strictly_proper, tol)? {
        return Err(Error::SynthesisFailure("solver point fails the lifted LMI check".into()));
    }
    let controller = reconstruct(plant, &point.canonical_lift())?;
    if !in_kgamma(plant, &controller, gamma, strictly_proper, tol)? {
        return Err(Error::SynthesisFailure(format!(
            "reconstructed controller does not verify at γ = {gamma}"
        )));
    }
    Ok(Synthesis { controller, point, feasibility: res })
}

/// A controller in `K_γ` (strictly proper when requested).
pub fn synthesize(plant: &Plant, gamma: f64, strictly_proper: bool, seed: u64, tol: &Tolerances) -> Result<Controller> {
    Ok(synthesize_with(plant, gamma, strictly_proper, seed, &SolverOptions::default(), None, tol)?.controller)
}

/// A strictly proper controller in `L_γ` from the lifted H2 LMI, with `Γ`.
pub fn synthesize_h2(plant: &Plant, gamma: f64, seed: u64, tol: &Tolerances) -> Result<(Controller, SymMatrix)> {
    let lmi = assemble_h2_synthesis_lmi(plant, gamma)?;
    let res = solve_feasibility(&lmi, &SolverOptions::default(), seed, tol)?;
    if res.status != FeasibilityStatus::Feasible {
        return Err(Error::SynthesisFailure(format!("H2 LMI not feasible within budget at γ = {gamma}")));
    }
    let (point, g) = lmi.layout.expect("H2 LMI has a layout").unpack(&res.z);
    let g = g.expect("H2 layout has Γ");
    if !in_lifted_lgamma(plant, &point, &g, gamma, tol)? {
        return Err(Error::SynthesisFailure("solver point fails the lifted H2 check".into()));
    }
    let controller = reconstruct(plant, &point.canonical_lift())?;
    if !in_lgamma(plant, &controller, gamma, tol)? {
        return Err(Error::SynthesisFailure(format!("controller does not verify at γ = {gamma}")));
    }
    Ok((controller, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaStar {
    /// Level at which synthesis failed within budget; a numerical lower
    /// estimate, not a certificate.
    pub lo: f64,
    /// Level with a verified witness.
    pub hi: f64,
    pub witness: Controller,
    /// The bracket did not reach the requested width.
    pub budget_exhausted: bool,
    pub evaluations: usize,
}

/// Brackets the optimal H∞ level by bisection with verified synthesis as
/// the oracle. `budget` caps the number of synthesis attempts.
pub fn gamma_star(
    plant: &Plant,
    rel_tol: f64,
    budget: usize,
    strictly_proper: bool,
    seed: u64,
    tol: &Tolerances,
) -> Result<GammaStar> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidInput("relative tolerance must be positive".into()));
    }
    let report = check_stabilizable_detectable(plant, tol)?;
    if !report.stabilizable || !report.detectable {
        return Err(Error::AssumptionViolation("plant is not stabilizable and detectable".into()));
    }
    let opts = SolverOptions::default();
    let mut evaluations = 0;
    let attempt = |g: f64, warm: Option<&DVector<f64>>, evaluations: &mut usize| {
        *evaluations += 1;
        synthesize_with(plant, g, strictly_proper, seed, &opts, warm, tol).ok()
    };

    let mut hi = 1.0_f64.max(2.0 * max_abs(&plant.d11));
    let mut witness = loop {
        if let Some(s) = attempt(hi, None, &mut evaluations) {
            break s;
        }
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::AssumptionViolation("no feasible level up to 1e9".into()));
        }
    };
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < 1e-9 {
            lo = 0.0;
            break;
        }
        match attempt(lo, Some(&witness.feasibility.z), &mut evaluations) {
            Some(s) => {
                hi = lo;
                witness = s;
            }
            None => break,
        }
        if evaluations >= budget {
            break;
        }
    }
    while hi > lo * (1.0 + rel_tol) && evaluations < budget {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        match attempt(mid, Some(&witness.feasibility.z), &mut evaluations) {
            Some(s) => {
                hi = mid;
                witness = s;
            }
            None => lo = mid,
        }
    }
    Ok(GammaStar {
        lo,
        hi,
        budget_exhausted: hi > lo * (1.0 + rel_tol),
        witness: witness.controller,
        evaluations,
    })
}
