//! Seeded, stream-addressable randomness and the matrix samplers built on it.
//!
//! A [`SeededRng`] is identified by `(seed, stream)`. The same pair always
//! reproduces the same draw sequence, and [`SeededRng::substream`] derives
//! child generators from the pair alone (never from how many values have
//! been drawn), so trial `t` of an experiment sees the same randomness no
//! matter how trials are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{householder_qr, HaarReflectors, Matrix};

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child generator number `id`. Depends only on
    /// `(seed, stream, id)`.
    pub fn substream(&self, id: u64) -> SeededRng {
        let child_seed = splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0xA5A5_5A5A)));
        SeededRng::new(child_seed, id)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// Uniform point on the unit sphere of ℝⁿ.
    pub fn unit_sphere(&mut self, n: usize) -> Vec<f64> {
        loop {
            let g = self.normal_vec(n);
            let norm = crate::linalg::norm2(&g);
            if norm > 0.0 {
                return g.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `n × m` matrix of i.i.d. `N(0, std²)` entries.
pub fn sample_gaussian_matrix(rng: &mut SeededRng, n: usize, m: usize, std: f64) -> Result<Matrix> {
    if n == 0 || m == 0 {
        return invalid(format!("gaussian matrix needs positive shape, got {n}x{m}"));
    }
    if !(std > 0.0 && std.is_finite()) {
        return invalid(format!("gaussian std must be positive and finite, got {std}"));
    }
    let data = (0..n * m).map(|_| std * rng.standard_normal()).collect();
    Ok(Matrix::from_raw(n, m, data))
}

/// Haar-distributed `n × n` orthogonal matrix: Householder QR of a Gaussian
/// matrix with the columns of `Q` multiplied by the signs of `diag(R)`.
pub fn sample_haar_orthogonal(rng: &mut SeededRng, n: usize) -> Result<Matrix> {
    sample_haar_frame(rng, n, n)
}

/// First `k` columns of a Haar orthogonal matrix (`n × k`, orthonormal
/// columns): the thin QR of an `n × k` Gaussian matrix with sign correction.
pub fn sample_haar_frame(rng: &mut SeededRng, n: usize, k: usize) -> Result<Matrix> {
    if n == 0 || k == 0 || k > n {
        return invalid(format!("haar frame needs 1 <= k <= n, got n={n}, k={k}"));
    }
    let g = sample_gaussian_matrix(rng, n, k, 1.0)?;
    let qr = householder_qr(&g);
    let signs: Vec<f64> = qr
        .r
        .diagonal()
        .iter()
        .map(|&d| if d < 0.0 { -1.0 } else { 1.0 })
        .collect();
    Ok(qr.q.scale_cols(&signs))
}

/// Haar orthogonal matrix in factored form, for O(N²) matrix–vector
/// products at widths where a dense sample is too expensive.
pub fn sample_haar_reflectors(rng: &mut SeededRng, n: usize) -> Result<HaarReflectors> {
    if n == 0 {
        return invalid("haar operator needs n >= 1");
    }
    Ok(HaarReflectors::from_gaussians(n, || rng.standard_normal()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream_is_bit_identical() {
        let a = sample_gaussian_matrix(&mut SeededRng::new(42, 0), 5, 4, 1.0).unwrap();
        let b = sample_gaussian_matrix(&mut SeededRng::new(42, 0), 5, 4, 1.0).unwrap();
        assert_eq!(a, b);
        let c = sample_gaussian_matrix(&mut SeededRng::new(42, 1), 5, 4, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn substreams_ignore_generator_position() {
        let mut r = SeededRng::new(7, 3);
        let before = r.substream(5).standard_normal();
        r.standard_normal();
        let after = r.substream(5).standard_normal();
        assert_eq!(before, after);
        assert_ne!(r.substream(5).standard_normal(), r.substream(6).standard_normal());
    }

    #[test]
    fn zero_std_is_rejected() {
        let mut r = SeededRng::new(1, 0);
        assert!(sample_gaussian_matrix(&mut r, 2, 2, 0.0).is_err());
        assert!(sample_gaussian_matrix(&mut r, 0, 2, 1.0).is_err());
        assert!(sample_haar_orthogonal(&mut r, 0).is_err());
    }

    #[test]
    fn haar_is_orthogonal() {
        let mut r = SeededRng::new(9, 0);
        for n in [1, 2, 17, 64, 130] {
            let q = sample_haar_orthogonal(&mut r, n).unwrap();
            assert!(q.orthogonality_defect() < 1e-12 * n as f64, "n={n}");
            assert!(q.matmul_t(&q).sub(&Matrix::identity(n)).frobenius_norm() < 1e-12 * n as f64);
        }
    }
}
