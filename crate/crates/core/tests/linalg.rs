mod common;

use common::*;
use freejac::linalg::{
    householder_qr, schatten_norm, singular_values, svd, symmetric_eigen, symmetric_eigenvalues, tridiagonal_eigen,
    HaarReflectors, Matrix,
};
use freejac::par::RunningStats;
use freejac::rng::{sample_gaussian_matrix, sample_haar_frame, sample_haar_orthogonal, sample_haar_reflectors};
use freejac::{Error, SeededRng};

fn gaussian(n: usize, m: usize, seed: u64) -> Matrix {
    sample_gaussian_matrix(&mut SeededRng::new(seed, 0), n, m, 1.0).unwrap()
}

#[test]
fn gemm_matches_naive_product_on_odd_shapes() {
    for (n, k, m) in [(1, 1, 1), (3, 7, 5), (17, 9, 33), (64, 65, 63)] {
        let a = gaussian(n, k, 1);
        let b = gaussian(k, m, 2);
        let fast = a.matmul(&b);
        let slow = naive_matmul(&a, &b);
        assert!(fast.sub(&slow).max_abs() < 1e-12 * k as f64, "{n}x{k}x{m}");
        assert!(a.matmul_t(&b.transpose()).sub(&slow).max_abs() < 1e-12 * k as f64);
        assert!(a.transpose().t_matmul(&b).sub(&slow).max_abs() < 1e-12 * k as f64);
    }
}

#[test]
fn haar_samples_are_orthogonal_at_acceptance_sizes() {
    let mut rng = SeededRng::new(5, 0);
    for n in [16, 64, 256] {
        let q = sample_haar_orthogonal(&mut rng, n).unwrap();
        assert!(q.orthogonality_defect() < 1e-12, "N={n}: {}", q.orthogonality_defect());
        assert!(q.matmul_t(&q).sub(&Matrix::identity(n)).max_abs() < 1e-13);
    }
}

#[test]
fn haar_trace_moments_match_the_orthogonal_group() {
    // For Haar O(N), N ≥ 2: E tr Q = 0, E (tr Q)² = 1, E Q₁₁² = 1/N.
    let n = 6;
    let rng = SeededRng::new(17, 0);
    let (mut tr, mut tr2, mut q11) = (RunningStats::new(), RunningStats::new(), RunningStats::new());
    for t in 0..4000 {
        let q = sample_haar_orthogonal(&mut rng.substream(t), n).unwrap();
        tr.push(q.trace());
        tr2.push(q.trace().powi(2));
        q11.push(q.get(0, 0).powi(2));
    }
    assert!(tr.mean().abs() < 4.0 * tr.standard_error(), "E tr Q = {}", tr.mean());
    assert!((tr2.mean() - 1.0).abs() < 4.0 * tr2.standard_error(), "E (tr Q)² = {}", tr2.mean());
    assert!((q11.mean() - 1.0 / n as f64).abs() < 4.0 * q11.standard_error());
}

#[test]
fn reflector_form_matches_dense_and_is_orthogonal() {
    let mut rng = SeededRng::new(9, 0);
    let h = sample_haar_reflectors(&mut rng, 40).unwrap();
    let q = h.to_dense();
    assert!(q.orthogonality_defect() < 1e-12);
    let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut y = x.clone();
    h.apply(&mut y);
    let dense = q.matvec(&x);
    assert!(y.iter().zip(&dense).all(|(a, b)| (a - b).abs() < 1e-13));
    h.apply_transpose(&mut y);
    assert!(y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-13));
}

#[test]
fn reflector_form_has_haar_trace_statistics() {
    let n = 5;
    let rng = SeededRng::new(23, 0);
    let mut tr2 = RunningStats::new();
    for t in 0..4000 {
        let q = sample_haar_reflectors(&mut rng.substream(t), n).unwrap().to_dense();
        tr2.push(q.trace().powi(2));
    }
    assert!((tr2.mean() - 1.0).abs() < 4.0 * tr2.standard_error(), "E (tr Q)² = {}", tr2.mean());
    let mut v = [-2.0].into_iter();
    let h = HaarReflectors::from_gaussians(1, || v.next().unwrap());
    assert_eq!(h.to_dense().get(0, 0).abs(), 1.0);
}

#[test]
fn haar_frame_has_orthonormal_columns() {
    let f = sample_haar_frame(&mut SeededRng::new(2, 0), 50, 20).unwrap();
    assert_eq!(f.shape(), (50, 20));
    assert!(f.orthogonality_defect() < 1e-12);
    assert!(sample_haar_frame(&mut SeededRng::new(2, 0), 5, 6).is_err());
}

#[test]
fn qr_reconstructs_and_is_upper_triangular() {
    for (m, n) in [(5, 5), (40, 13), (130, 70)] {
        let a = gaussian(m, n, 3);
        let qr = householder_qr(&a);
        assert!(qr.q.matmul(&qr.r).sub(&a).max_abs() < 1e-12 * m as f64);
        assert!(qr.q.orthogonality_defect() < 1e-12);
        for i in 0..n {
            for j in 0..i {
                assert_eq!(qr.r.get(i, j), 0.0);
            }
        }
    }
}

#[test]
fn eigenvalues_of_the_second_difference_matrix() {
    let n = 30;
    let a = Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    let eig = symmetric_eigenvalues(&a).unwrap();
    for (k, e) in eig.iter().enumerate() {
        let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((e - exact).abs() < 1e-12, "λ_{k} = {e} vs {exact}");
    }
    let (vals, _) = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
    assert!(vals.iter().zip(&eig).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn eigen_residual_and_orthogonality() {
    for n in [16, 64, 256] {
        let g = gaussian(n, n, 4);
        let a = g.add(&g.transpose());
        let r = symmetric_eigen(&a).unwrap();
        let resid = a.matmul(&r.eigenvectors).sub(&r.eigenvectors.scale_cols(&r.eigenvalues));
        assert!(resid.frobenius_norm() < 1e-12 * a.frobenius_norm() * n as f64);
        assert!(r.eigenvectors.orthogonality_defect() < 1e-11);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn eigen_rejects_asymmetric_input() {
    let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(symmetric_eigen(&a), Err(Error::NotSymmetric { .. })));
}

#[test]
fn svd_reconstructs_and_matches_gram_eigenvalues() {
    for (m, n) in [(8, 8), (30, 12), (12, 30), (100, 100)] {
        let a = gaussian(m, n, 6);
        let d = svd(&a).unwrap();
        let rebuilt = d.u.scale_cols(&d.s).matmul_t(&d.v);
        assert!(rebuilt.sub(&a).max_abs() < 1e-11, "{m}x{n}");
        let mut gram = a.t_matmul(&a);
        if m < n {
            gram = a.matmul_t(&a);
        }
        let mut eig = symmetric_eigenvalues(&gram).unwrap();
        eig.reverse();
        for (s, e) in d.s.iter().zip(&eig) {
            assert!((s * s - e).abs() < 1e-10 * e.abs().max(1.0));
        }
    }
}

#[test]
fn svd_of_rank_deficient_matrix() {
    let u: Vec<f64> = (0..6).map(|i| i as f64 + 1.0).collect();
    let v: Vec<f64> = (0..4).map(|i| 1.0 - i as f64 * 0.5).collect();
    let s = singular_values(&Matrix::outer(&u, &v)).unwrap();
    let expect = freejac::linalg::norm2(&u) * freejac::linalg::norm2(&v);
    assert!((s[0] - expect).abs() < 1e-12 * expect);
    assert!(s[1..].iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn schatten_norms_of_simple_matrices() {
    let q = sample_haar_orthogonal(&mut SeededRng::new(1, 0), 20).unwrap();
    for p in [1, 2, 3, 4] {
        assert!((schatten_norm(&q, p).unwrap() - 1.0).abs() < 1e-12);
    }
    let d = Matrix::from_diag(&[3.0, 0.0, 0.0, 1.0]);
    // ((3² + 1²)/4)^{1/2}
    assert!((schatten_norm(&d, 2).unwrap() - (10.0f64 / 4.0).sqrt()).abs() < 1e-14);
    assert!(schatten_norm(&gaussian(3, 4, 0), 2).is_err());
}

#[test]
fn holder_and_trace_cyclicity() {
    let n = 40;
    let a = gaussian(n, n, 11);
    let b = gaussian(n, n, 12);
    let c = gaussian(n, n, 13);
    let t1 = a.matmul(&b).matmul(&c).trace();
    let t2 = c.matmul(&a).matmul(&b).trace();
    assert!((t1 - t2).abs() < 1e-10 * t1.abs().max(1.0));
    let ab = a.matmul(&b);
    let lhs = schatten_norm(&ab, 1).unwrap();
    let rhs = schatten_norm(&a, 2).unwrap() * schatten_norm(&b, 2).unwrap();
    assert!(lhs <= rhs * (1.0 + 1e-12));
}
