//! Compression by `P = diag(1, …, 1, 0)`: the trace perturbation bound and
//! the orthogonal approximation of the `(N−1)` corner of an orthogonal matrix.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{schatten_from_singular_values, schatten_norm, svd, Matrix};

/// Relative slack allowed when comparing a computed quantity with its bound.
const BOUND_SLACK: f64 = 1e-12;

/// `diag(1, …, 1, 0)` of size `n`.
pub fn cutoff_projection(n: usize) -> Matrix {
    let mut d = vec![1.0; n];
    if let Some(last) = d.last_mut() {
        *last = 0.0;
    }
    Matrix::from_diag(&d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCutoff {
    /// `|tr[P X₁ P ⋯ P Xₙ P] − tr[X₁ ⋯ Xₙ]|`.
    pub lhs: f64,
    /// Schatten-n bound `C` on the factors.
    pub c: f64,
    /// `n Cⁿ / N^{1/n}`, the bound that is asserted.
    pub bound: f64,
    /// `n Cⁿ / Nⁿ`, the sharper displayed form; reported, not asserted.
    pub displayed_bound: f64,
    pub holds: bool,
}

/// Evaluates both sides of the cutoff trace inequality for `X₁ … Xₙ`. When
/// `c` is `None` the bound uses `max_i ‖X_i‖_n` (normalized Schatten norm).
pub fn cutoff_trace_check(matrices: &[Matrix], c: Option<f64>) -> Result<TraceCutoff> {
    let Some(first) = matrices.first() else {
        return invalid("cutoff check needs at least one matrix");
    };
    let big_n = first.rows();
    if big_n < 2 || matrices.iter().any(|m| m.shape() != (big_n, big_n)) {
        return invalid("cutoff check needs square matrices of one size N >= 2");
    }
    let n = matrices.len();
    let c = match c {
        Some(c) if c.is_finite() && c >= 0.0 => c,
        Some(c) => return invalid(format!("Schatten bound must be nonnegative, got {c}")),
        None => matrices
            .iter()
            .map(|m| schatten_norm(m, n as u32))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
    };

    // P X P with P = diag(1,…,1,0) zeroes the last row and column.
    let compress = |m: &Matrix| {
        let mut out = m.clone();
        let s = out.as_mut_slice();
        for j in 0..big_n {
            s[(big_n - 1) * big_n + j] = 0.0;
            s[j * big_n + big_n - 1] = 0.0;
        }
        out
    };
    let mut full = matrices[0].clone();
    let mut cut = compress(&matrices[0]);
    for m in &matrices[1..] {
        full = full.matmul(m);
        cut = cut.matmul(&compress(m));
    }
    let lhs = (cut.normalized_trace() - full.normalized_trace()).abs();
    let cn = c.powi(n as i32);
    let bound = n as f64 * cn / (big_n as f64).powf(1.0 / n as f64);
    let displayed_bound = n as f64 * cn / (big_n as f64).powi(n as i32);
    let holds = lhs <= bound * (1.0 + BOUND_SLACK) + f64::EPSILON;
    Ok(TraceCutoff { lhs, c, bound, displayed_bound, holds })
}

#[derive(Debug, Clone)]
pub struct OrthogonalApprox {
    /// `(N−1) × (N−1)` orthogonal `U Vᵀ` from the SVD `U Σ Vᵀ` of the corner.
    pub approx: Matrix,
    /// Schatten-p norm of `PWP − diag(approx, 0)`, normalized over the
    /// `N − 1` dimensional corner.
    pub error: f64,
    /// `|1 − σ_i|` for the singular values `σ_i` of the corner.
    pub residual_singular_values: Vec<f64>,
    /// `(N−1)^{−1/p}`.
    pub bound: f64,
    pub holds: bool,
}

/// Orthogonal approximation of the upper-left `(N−1)` corner of an
/// orthogonal `w`.
pub fn cutoff_orthogonal_approx(w: &Matrix, p: u32) -> Result<OrthogonalApprox> {
    if !w.is_square() || w.rows() < 2 {
        return invalid("orthogonal approximation needs a square matrix with N >= 2");
    }
    if p == 0 {
        return invalid("Schatten exponent must be >= 1");
    }
    let m = w.rows() - 1;
    let corner = w.submatrix(0, 0, m, m);
    let dec = svd(&corner)?;
    let approx = dec.u.matmul_t(&dec.v);
    // corner − UVᵀ = U (Σ − I) Vᵀ.
    let s: Vec<f64> = dec.s.iter().map(|x| (x - 1.0).abs()).collect();
    let error = schatten_from_singular_values(&s, p, m);
    let bound = (m as f64).powf(-1.0 / p as f64);
    let holds = error <= bound * (1.0 + BOUND_SLACK);
    Ok(OrthogonalApprox { approx, error, residual_singular_values: s, bound, holds })
}
