//! Householder QR with compact-WY blocking, and a factored product of
//! Householder reflectors used to apply Haar-orthogonal matrices to vectors
//! in O(N²).

use super::gemm::{gemm, View, ViewMut};
use super::{dot, Matrix};

const PANEL: usize = 32;

/// Householder reflector `H = I − τ v vᵀ` with `v₀ = 1`, chosen so that
/// `H x = β e₁`. Overwrites `x` with `v` (with `x[0] = β`) and returns `(τ, β)`.
fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail_norm = x[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
    if tail_norm == 0.0 {
        return (0.0, alpha);
    }
    let norm = alpha.hypot(tail_norm);
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let inv = 1.0 / (alpha - beta);
    x[1..].iter_mut().for_each(|t| *t *= inv);
    x[0] = beta;
    (tau, beta)
}

/// Applies `I − τ v vᵀ` (with `v₀ = 1` implied, `v[1..]` given) to `y`.
#[inline]
fn apply_reflector(tau: f64, v_tail: &[f64], y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w = y[0] + dot(v_tail, &y[1..]);
    let tw = tau * w;
    y[0] -= tw;
    y[1..].iter_mut().zip(v_tail).for_each(|(yi, vi)| *yi -= tw * vi);
}

struct Panel {
    /// First row/column index of the panel.
    start: usize,
    width: usize,
    /// Unit lower-trapezoidal V, column-major, `(m − start) × width`.
    v: Vec<f64>,
    /// Upper-triangular T, row-major `width × width`.
    t: Vec<f64>,
}

/// Thin QR factorization `A = Q R` of an `m × n` matrix, `m ≥ n`.
#[derive(Debug, Clone)]
pub struct ThinQr {
    /// `m × n` with orthonormal columns.
    pub q: Matrix,
    /// `n × n` upper triangular. Diagonal signs follow the Householder
    /// convention and are not normalized.
    pub r: Matrix,
}

/// Blocked Householder QR. Panics if `a.rows() < a.cols()`.
pub fn householder_qr(a: &Matrix) -> ThinQr {
    let (m, n) = a.shape();
    assert!(m >= n, "householder_qr needs rows >= cols");
    let mut work = a.clone();
    let mut panels = Vec::with_capacity(n.div_ceil(PANEL));

    let mut j0 = 0;
    while j0 < n {
        let nb = PANEL.min(n - j0);
        let mr = m - j0;
        // Column-major copy of the panel.
        let mut p = vec![0.0; mr * nb];
        for c in 0..nb {
            for i in 0..mr {
                p[c * mr + i] = work.get(j0 + i, j0 + c);
            }
        }
        let mut taus = vec![0.0; nb];
        for c in 0..nb {
            let (head, rest) = p.split_at_mut((c + 1) * mr);
            let col = &mut head[c * mr + c..];
            let (tau, _beta) = make_reflector(col);
            taus[c] = tau;
            let v_tail = &col[1..];
            for k in 0..(nb - c - 1) {
                let y = &mut rest[k * mr + c..(k + 1) * mr];
                apply_reflector(tau, v_tail, y);
            }
        }
        // Write R entries (upper part of the panel) back, then unit V.
        for c in 0..nb {
            for i in 0..=c {
                work.set(j0 + i, j0 + c, p[c * mr + i]);
            }
            for i in (c + 1)..mr {
                work.set(j0 + i, j0 + c, 0.0);
            }
        }
        let mut v = p;
        for c in 0..nb {
            for i in 0..c {
                v[c * mr + i] = 0.0;
            }
            v[c * mr + c] = 1.0;
        }
        let t = build_t(&v, mr, nb, &taus);

        // Trailing update A₂ ← (I − V Tᵀ Vᵀ) A₂ = Hᵀ A₂ for the block reflector.
        let nt = n - j0 - nb;
        if nt > 0 {
            let mut w = vec![0.0; nb * nt];
            let vv = View::strided(&v, 0, mr, nb, 1, mr);
            {
                let data = work.as_slice();
                let a2 = View::new(data, j0 * n + j0 + nb, mr, nt, n);
                gemm(1.0, vv.t(), a2, 0.0, ViewMut::new(&mut w, 0, nb, nt, nt));
            }
            let mut w2 = vec![0.0; nb * nt];
            let tt = View::new(&t, 0, nb, nb, nb).t();
            gemm(1.0, tt, View::new(&w, 0, nb, nt, nt), 0.0, ViewMut::new(&mut w2, 0, nb, nt, nt));
            let data = work.as_mut_slice();
            gemm(
                -1.0,
                vv,
                View::new(&w2, 0, nb, nt, nt),
                1.0,
                ViewMut::new(data, j0 * n + j0 + nb, mr, nt, n),
            );
        }
        panels.push(Panel {
            start: j0,
            width: nb,
            v,
            t,
        });
        j0 += nb;
    }

    let r = Matrix::from_fn(n, n, |i, j| if j >= i { work.get(i, j) } else { 0.0 });

    // Q = H₀ H₁ ⋯ [I; 0], accumulated panel by panel from the back.
    let mut q = Matrix::zeros(m, n);
    for i in 0..n {
        q.set(i, i, 1.0);
    }
    for panel in panels.iter().rev() {
        let (s, nb) = (panel.start, panel.width);
        let mr = m - s;
        let nc = n - s;
        let vv = View::strided(&panel.v, 0, mr, nb, 1, mr);
        let mut w = vec![0.0; nb * nc];
        gemm(
            1.0,
            vv.t(),
            View::new(q.as_slice(), s * n + s, mr, nc, n),
            0.0,
            ViewMut::new(&mut w, 0, nb, nc, nc),
        );
        let mut w2 = vec![0.0; nb * nc];
        gemm(
            1.0,
            View::new(&panel.t, 0, nb, nb, nb),
            View::new(&w, 0, nb, nc, nc),
            0.0,
            ViewMut::new(&mut w2, 0, nb, nc, nc),
        );
        gemm(
            -1.0,
            vv,
            View::new(&w2, 0, nb, nc, nc),
            1.0,
            ViewMut::new(q.as_mut_slice(), s * n + s, mr, nc, n),
        );
    }
    ThinQr { q, r }
}

/// Forward column-wise T factor: `H₀⋯H_{k−1} = I − V T Vᵀ`.
fn build_t(v: &[f64], mr: usize, nb: usize, taus: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; nb * nb];
    for i in 0..nb {
        let tau = taus[i];
        t[i * nb + i] = tau;
        if i == 0 || tau == 0.0 {
            continue;
        }
        // z = −τ V[:, 0..i]ᵀ v_i, then T[0..i, i] = T[0..i, 0..i] z.
        let vi = &v[i * mr..(i + 1) * mr];
        let z: Vec<f64> = (0..i)
            .map(|c| -tau * dot(&v[c * mr + i..(c + 1) * mr], &vi[i..]))
            .collect();
        for r in 0..i {
            let mut acc = 0.0;
            for c in r..i {
                acc += t[r * nb + c] * z[c];
            }
            t[r * nb + i] = acc;
        }
    }
    t
}

/// A Haar-orthogonal matrix `Q = H₀ H₁ ⋯ H_{N−1} S` kept in factored form.
///
/// Built from Householder reflectors of independent Gaussian vectors of
/// lengths `N, N−1, …, 1`, which is exactly the sequence of reflectors that
/// Householder QR produces on an `N × N` Gaussian matrix (the trailing block
/// after each reflection is again i.i.d. Gaussian). `S` holds the signs of
/// the would-be `R` diagonal. Applying `Q` to a vector costs O(N²).
#[derive(Debug, Clone)]
pub struct HaarReflectors {
    n: usize,
    /// Packed reflector tails: reflector k owns `N − k − 1` entries.
    tails: Vec<f64>,
    offsets: Vec<usize>,
    taus: Vec<f64>,
    signs: Vec<f64>,
}

impl HaarReflectors {
    /// Builds the operator from a stream of standard normal draws.
    pub fn from_gaussians(n: usize, mut draw: impl FnMut() -> f64) -> Self {
        let mut tails = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        let mut offsets = Vec::with_capacity(n);
        let mut taus = Vec::with_capacity(n);
        let mut signs = Vec::with_capacity(n);
        let mut buf = vec![0.0; n];
        for k in 0..n {
            let len = n - k;
            let x = &mut buf[..len];
            x.iter_mut().for_each(|t| *t = draw());
            let (tau, beta) = make_reflector(x);
            offsets.push(tails.len());
            tails.extend_from_slice(&x[1..]);
            taus.push(tau);
            signs.push(if beta < 0.0 { -1.0 } else { 1.0 });
        }
        HaarReflectors {
            n,
            tails,
            offsets,
            taus,
            signs,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn tail(&self, k: usize) -> &[f64] {
        let len = self.n - k - 1;
        &self.tails[self.offsets[k]..self.offsets[k] + len]
    }

    /// `x ← Q x`.
    pub fn apply(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        x.iter_mut().zip(&self.signs).for_each(|(xi, s)| *xi *= s);
        for k in (0..self.n).rev() {
            apply_reflector(self.taus[k], self.tail(k), &mut x[k..]);
        }
    }

    /// `x ← Qᵀ x`.
    pub fn apply_transpose(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for k in 0..self.n {
            apply_reflector(self.taus[k], self.tail(k), &mut x[k..]);
        }
        x.iter_mut().zip(&self.signs).for_each(|(xi, s)| *xi *= s);
    }

    /// Dense `Q`; O(N³), intended for checks.
    pub fn to_dense(&self) -> Matrix {
        let n = self.n;
        let mut cols = Matrix::identity(n);
        // Rows of `cols` are the columns Q e_j.
        for j in 0..n {
            let start = j * n;
            self.apply(&mut cols.as_mut_slice()[start..start + n]);
        }
        cols.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |i, j| ((i * 7 + j * 13) as f64 * 0.917).sin() + if i == j { 0.5 } else { 0.0 })
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        for &(m, n) in &[(1, 1), (5, 3), (40, 40), (70, 33), (100, 65)] {
            let a = test_matrix(m, n);
            let ThinQr { q, r } = householder_qr(&a);
            assert!(q.orthogonality_defect() < 1e-12 * (n as f64).max(1.0), "{m}x{n}");
            let rec = q.matmul(&r);
            assert!(rec.sub(&a).max_abs() < 1e-12 * a.max_abs() * m as f64, "{m}x{n}");
            for i in 0..n {
                for j in 0..i {
                    assert_eq!(r.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn reflector_maps_to_multiple_of_e1() {
        let mut x = vec![3.0, 4.0, 0.0, 12.0];
        let orig = x.clone();
        let (tau, beta) = make_reflector(&mut x);
        assert!((beta.abs() - 13.0).abs() < 1e-12);
        let mut y = orig;
        apply_reflector(tau, &x[1..], &mut y);
        assert!((y[0] - beta).abs() < 1e-12);
        assert!(y[1..].iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn factored_operator_is_orthogonal_and_consistent() {
        let mut state = 0x1234_5678_u64;
        let mut draw = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let h = HaarReflectors::from_gaussians(20, &mut draw);
        let q = h.to_dense();
        assert!(q.orthogonality_defect() < 1e-13);
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1 - 1.0).collect();
        let mut y = x.clone();
        h.apply(&mut y);
        let dense = q.matvec(&x);
        for (a, b) in y.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-13);
        }
        h.apply_transpose(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
