//! Real Schur decomposition `A = Q T Qᵀ` by Householder Hessenberg reduction
//! and Francis double-shift QR, with eigenvalue reordering by direct swaps of
//! adjacent diagonal blocks.

use nalgebra::Complex;

use super::{ensure_finite, ensure_square, Mat};
use crate::error::{Error, Result};

/// A 1×1 or 2×2 diagonal block of the quasi-triangular factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurBlock {
    pub start: usize,
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct RealSchur {
    /// Orthogonal Schur vectors.
    pub q: Mat,
    /// Upper quasi-triangular factor. 2×2 blocks carry complex pairs only.
    pub t: Mat,
}

impl RealSchur {
    pub fn new(a: &Mat) -> Result<Self> {
        ensure_square(a, "matrix")?;
        ensure_finite(a, "matrix")?;
        let n = a.nrows();
        if n == 0 {
            return Ok(Self { q: Mat::zeros(0, 0), t: Mat::zeros(0, 0) });
        }
        let mut h = a.clone();
        let mut v = Mat::identity(n, n);
        hessenberg(&mut h, &mut v);
        francis_qr(&mut h, &mut v)?;
        // Clear everything below the first subdiagonal.
        for j in 0..n {
            for i in (j + 2)..n {
                h[(i, j)] = 0.0;
            }
        }
        Ok(Self { q: v, t: h })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn blocks(&self) -> Vec<SchurBlock> {
        let n = self.dim();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)] != 0.0 {
                out.push(SchurBlock { start: i, size: 2 });
                i += 2;
            } else {
                out.push(SchurBlock { start: i, size: 1 });
                i += 1;
            }
        }
        out
    }

    /// Eigenvalues of one diagonal block; complex pairs are returned with the
    /// positive imaginary part first.
    pub fn block_eigenvalues(&self, b: SchurBlock) -> Vec<Complex<f64>> {
        let s = b.start;
        if b.size == 1 {
            return vec![Complex::new(self.t[(s, s)], 0.0)];
        }
        let (a, bb, c, d) = (
            self.t[(s, s)],
            self.t[(s, s + 1)],
            self.t[(s + 1, s)],
            self.t[(s + 1, s + 1)],
        );
        let p = 0.5 * (a - d);
        let disc = p * p + bb * c;
        let mid = 0.5 * (a + d);
        if disc >= 0.0 {
            let r = disc.sqrt();
            vec![Complex::new(mid + r, 0.0), Complex::new(mid - r, 0.0)]
        } else {
            let im = (-disc).sqrt();
            vec![Complex::new(mid, im), Complex::new(mid, -im)]
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        self.blocks()
            .into_iter()
            .flat_map(|b| self.block_eigenvalues(b))
            .collect()
    }

    /// Moves every block whose eigenvalues satisfy `select` to the leading
    /// positions, preserving relative order. Returns the dimension of the
    /// selected invariant subspace, spanned by the leading columns of `q`.
    pub fn reorder<F>(&mut self, select: F) -> Result<usize>
    where
        F: Fn(Complex<f64>) -> bool,
    {
        let mut blocks: Vec<(SchurBlock, bool)> = self
            .blocks()
            .into_iter()
            .map(|b| {
                let sel = select(self.block_eigenvalues(b)[0]);
                (b, sel)
            })
            .collect();
        let mut next = 0;
        for idx in 0..blocks.len() {
            if !blocks[idx].1 {
                continue;
            }
            let mut cur = idx;
            while cur > next {
                let (upper, lower) = (blocks[cur - 1], blocks[cur]);
                self.swap_adjacent(upper.0.start, upper.0.size, lower.0.size)?;
                blocks[cur - 1] = (SchurBlock { start: upper.0.start, size: lower.0.size }, lower.1);
                blocks[cur] = (
                    SchurBlock { start: upper.0.start + lower.0.size, size: upper.0.size },
                    upper.1,
                );
                cur -= 1;
            }
            next += 1;
        }
        Ok(blocks.iter().filter(|b| b.1).map(|b| b.0.size).sum())
    }

    /// Swaps the diagonal blocks of sizes `p` (at `j`) and `q` (at `j + p`).
    fn swap_adjacent(&mut self, j: usize, p: usize, q: usize) -> Result<()> {
        let m = p + q;
        let s = self.t.view((j, j), (m, m)).into_owned();
        let a11 = s.view((0, 0), (p, p));
        let a12 = s.view((0, p), (p, q));
        let a22 = s.view((p, p), (q, q));

        // A11 X − X A22 = −A12, unknowns in column-major order.
        let mut k = Mat::zeros(p * q, p * q);
        let mut rhs = Mat::zeros(p * q, 1);
        for col in 0..q {
            for i in 0..p {
                let row = i + col * p;
                rhs[(row, 0)] = -a12[(i, col)];
                for l in 0..p {
                    k[(row, l + col * p)] += a11[(i, l)];
                }
                for mm in 0..q {
                    k[(row, i + mm * p)] -= a22[(mm, col)];
                }
            }
        }
        let x = k.lu().solve(&rhs).ok_or_else(|| {
            Error::NumericalFailure("Schur block swap: eigenvalues too close to separate".into())
        })?;

        // Basis [X; I] of the invariant subspace belonging to A22, extended to
        // a full orthogonal basis.
        let mut z = Mat::zeros(m, q + m);
        for col in 0..q {
            for i in 0..p {
                z[(i, col)] = x[(i + col * p, 0)];
            }
            z[(p + col, col)] = 1.0;
        }
        z.view_mut((0, q), (m, m)).copy_from(&Mat::identity(m, m));
        let u = z.qr().q();

        let n = self.dim();
        let rows = self.t.view((j, 0), (m, n)).into_owned();
        self.t.view_mut((j, 0), (m, n)).copy_from(&(u.transpose() * rows));
        let cols = self.t.view((0, j), (n, m)).into_owned();
        self.t.view_mut((0, j), (n, m)).copy_from(&(cols * &u));
        let qcols = self.q.view((0, j), (n, m)).into_owned();
        self.q.view_mut((0, j), (n, m)).copy_from(&(qcols * &u));

        let scale = s.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
        let residual = self
            .t
            .view((j + q, j), (p, q))
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        if residual > 1e-10 * scale {
            return Err(Error::NumericalFailure(format!(
                "Schur block swap is ill-conditioned (residual {residual:e})"
            )));
        }
        self.t.view_mut((j + q, j), (p, q)).fill(0.0);
        // A 2×2 block that landed on real eigenvalues is left as is; the
        // remaining fill below the subdiagonal is round-off.
        for c in j..(j + m) {
            for r in (c + 2)..n {
                self.t[(r, c)] = 0.0;
            }
        }
        Ok(())
    }
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal factor into `v`.
fn hessenberg(h: &mut Mat, v: &mut Mat) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f: f64 = (m..=high).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f: f64 = (m..=high).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    v.fill_with_identity();
    for m in (1..high).rev() {
        if h[(m, m - 1)] == 0.0 {
            continue;
        }
        for i in (m + 1)..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let g: f64 = (m..=high).map(|i| ort[i] * v[(i, j)]).sum();
            let g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] += g * ort[i];
            }
        }
    }
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix with exceptional
/// shifts. Real eigenvalue pairs are split into 1×1 blocks.
fn francis_qr(h: &mut Mat, v: &mut Mat) -> Result<()> {
    let nn = h.nrows();
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 100 * nn.max(4);
    let mut n = nn as isize - 1;
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)] == 0.0 || h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            if nu > 0 {
                h[(nu, nu - 1)] = 0.0;
            }
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            if nu > 1 {
                h[(nu - 1, nu - 2)] = 0.0;
            }
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in 0..nn {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
                h[(nu, nu - 1)] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            if iter % 10 == 0 && iter % 30 != 0 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter % 30 == 0 && iter > 0 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                return Err(Error::NumericalFailure(
                    "Schur QR iteration did not converge".into(),
                ));
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = 0.0;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p += z * v[(i, k + 2)];
                            v[(i, k + 2)] -= p * r;
                        }
                        v[(i, k)] -= p;
                        v[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    Ok(())
}
