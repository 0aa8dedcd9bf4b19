//! One-sided (Hestenes) Jacobi SVD and Schatten norms.

use super::{axpy, dot, Matrix};
use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 80;

/// `a = u · diag(s) · vᵀ` with `s` descending. For an `m × n` input `u` is
/// `m × min(m,n)` and `v` is `n × min(m,n)`; both are square for square input.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Column-major working state of the Jacobi iteration.
struct Jacobi {
    m: usize,
    n: usize,
    /// `m × n`, column j at `a[j·m..]`.
    a: Vec<f64>,
    /// `n × n`, column j at `v[j·n..]`; empty when vectors are not wanted.
    v: Vec<f64>,
}

impl Jacobi {
    fn new(a: &Matrix, vectors: bool) -> Self {
        let (m, n) = a.shape();
        let cm = a.transpose().into_vec();
        let v = if vectors { Matrix::identity(n).into_vec() } else { Vec::new() };
        Jacobi { m, n, a: cm, v }
    }

    fn run(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let tol = f64::EPSILON * (m as f64).sqrt().max(1.0);
        let mut norms: Vec<f64> = (0..n).map(|j| {
            let c = &self.a[j * m..(j + 1) * m];
            dot(c, c)
        }).collect();
        for sweep in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (alpha, beta) = (norms[p], norms[q]);
                    if alpha == 0.0 || beta == 0.0 {
                        continue;
                    }
                    let (left, right) = self.a.split_at_mut(q * m);
                    let cp = &mut left[p * m..(p + 1) * m];
                    let cq = &mut right[..m];
                    let gamma = dot(cp, cq);
                    if gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(cp, cq, c, s);
                    norms[p] = dot(cp, cp);
                    norms[q] = dot(cq, cq);
                    if !self.v.is_empty() {
                        let (vl, vr) = self.v.split_at_mut(q * n);
                        rotate(&mut vl[p * n..(p + 1) * n], &mut vr[..n], c, s);
                    }
                }
            }
            if !rotated {
                return Ok(());
            }
            if sweep + 1 == MAX_SWEEPS {
                break;
            }
        }
        Err(Error::NoConvergence {
            routine: "svd (one-sided Jacobi)",
            iterations: MAX_SWEEPS,
        })
    }
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn check_input(a: &Matrix) -> Result<()> {
    if !a.is_finite() {
        return invalid("svd input has non-finite entries");
    }
    Ok(())
}

/// Singular value decomposition.
pub fn svd(a: &Matrix) -> Result<Svd> {
    check_input(a)?;
    if a.rows() < a.cols() {
        let Svd { u, s, v } = svd(&a.transpose())?;
        return Ok(Svd { u: v, s, v: u });
    }
    let (m, n) = a.shape();
    let mut j = Jacobi::new(a, true);
    j.run()?;
    let sig: Vec<f64> = (0..n)
        .map(|c| dot(&j.a[c * m..(c + 1) * m], &j.a[c * m..(c + 1) * m]).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sig[y].total_cmp(&sig[x]));
    let s: Vec<f64> = order.iter().map(|&k| sig[k]).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let zero_tol = smax * f64::EPSILON * (m.max(n) as f64) * 4.0;

    // Orthonormal columns of U, column-major.
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        if sig[k] > zero_tol && sig[k] > 0.0 {
            let inv = 1.0 / sig[k];
            ucols.push(j.a[k * m..(k + 1) * m].iter().map(|x| x * inv).collect());
        } else {
            ucols.push(Vec::new());
            missing.push(pos);
        }
    }
    complete_basis(&mut ucols, &missing, m);

    let u = Matrix::from_fn(m, n, |i, c| ucols[c][i]);
    let v = Matrix::from_fn(n, n, |i, c| j.v[order[c] * n + i]);
    Ok(Svd { u, s, v })
}

/// Fills the empty slots of `cols` with unit vectors orthogonal to all others.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize], m: usize) {
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < m, "basis completion ran out of candidates");
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(c, &w);
                    axpy(-proj, c, &mut w);
                }
            }
            let nrm = dot(&w, &w).sqrt();
            if nrm > 1e-6 {
                w.iter_mut().for_each(|x| *x /= nrm);
                cols[slot] = w;
                break;
            }
        }
    }
}

/// Singular values only, descending.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    check_input(a)?;
    if a.rows() < a.cols() {
        return singular_values(&a.transpose());
    }
    let (m, n) = a.shape();
    let mut j = Jacobi::new(a, false);
    j.run()?;
    let mut s: Vec<f64> = (0..n)
        .map(|c| dot(&j.a[c * m..(c + 1) * m], &j.a[c * m..(c + 1) * m]).sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Normalized Schatten p-norm `(N⁻¹ Σ σᵢᵖ)^{1/p}` of a square matrix.
pub fn schatten_norm(a: &Matrix, p: u32) -> Result<f64> {
    if !a.is_square() {
        return invalid("schatten_norm needs a square matrix");
    }
    if p == 0 {
        return invalid("Schatten exponent must be >= 1");
    }
    let s = singular_values(a)?;
    Ok(schatten_from_singular_values(&s, p, a.rows()))
}

/// `(dim⁻¹ Σ σᵢᵖ)^{1/p}` for precomputed singular values.
pub fn schatten_from_singular_values(s: &[f64], p: u32, dim: usize) -> f64 {
    let sum: f64 = s.iter().map(|x| x.powi(p as i32)).sum();
    (sum / dim as f64).powf(1.0 / p as f64)
}
