mod common;

use common::*;
use freejac::free_calculus::{
    affine_pushforward, dilate, free_multiplicative_convolution, moments_from_s, predict_mu, predict_xi, s_transform,
    series_reversion,
};
use freejac::quadrature::GaussHermiteRule;
use freejac::{Activation, Error, MlpConfig, MomentSeries, PowerSeries};

fn catalan(n: u64) -> f64 {
    binomial(2 * n, n) / (n + 1) as f64
}

#[test]
fn oracle_counts_noncrossing_partitions_and_kreweras_sizes() {
    for n in 1..=6 {
        let nc = nc_partitions(n);
        assert_eq!(nc.len() as f64, catalan(n as u64), "|NC({n})|");
        for p in nc {
            let k = kreweras(&p);
            assert_eq!(block_sizes(&p).len() + block_sizes(&k).len(), n + 1);
        }
    }
}

#[test]
fn oracle_semicircle_cumulants() {
    // Standard semicircle: m_{2j} = Catalan(j), odd moments vanish; κ₂ = 1 only.
    let m: Vec<f64> = (1..=6u64).map(|n| if n % 2 == 0 { catalan(n / 2) } else { 0.0 }).collect();
    let k = free_cumulants(&m);
    for (i, v) in k.iter().enumerate() {
        let expect = if i == 1 { 1.0 } else { 0.0 };
        assert!((v - expect).abs() < 1e-12, "κ{} = {v}", i + 1);
    }
}

#[test]
fn reversion_matches_lagrange_inversion() {
    let cases: [&[f64]; 3] = [
        &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &[2.0, -0.5, 0.3, 0.1, -0.2, 0.05, 0.0, 0.01],
        &[0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625],
    ];
    for c in cases {
        let p = PowerSeries::new(c.to_vec()).unwrap();
        let r = series_reversion(&p).unwrap();
        let oracle = lagrange_inverse(c);
        for (a, b) in r.coeffs().iter().zip(&oracle) {
            assert_close(*a, *b, 1e-12, "reversion coefficient");
        }
    }
    // z + z² inverts to Σ (−1)^{n−1} Catalan(n−1) wⁿ.
    let r = series_reversion(&PowerSeries::new(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    for n in 1..=6u64 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        assert_close(r.coeff(n as usize), sign * catalan(n - 1), 1e-12, "catalan");
    }
}

#[test]
fn reversion_rejects_zero_linear_term() {
    let p = PowerSeries::new(vec![0.0, 1.0]).unwrap();
    assert!(matches!(series_reversion(&p), Err(Error::NonInvertibleSeries(_))));
}

#[test]
fn roundtrip_is_exact_at_order_ten() {
    for atoms in [
        vec![(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)],
        vec![(0.1, 0.9), (4.0, 0.1)],
        vec![(1.0, 1.0)],
    ] {
        let m = MomentSeries::from_atoms(&atoms, 10).unwrap();
        let back = moments_from_s(&s_transform(&m).unwrap()).unwrap();
        for k in 1..=10 {
            assert_close(back.moment(k), m.moment(k), 1e-10, "roundtrip");
        }
    }
}

#[test]
fn bernoulli_s_transform_closed_form() {
    // (1 − α)δ₀ + αδ_γ has S(z) = (z + 1) / (γ (z + α)).
    for (alpha, gamma) in [(0.5, 1.0), (0.2, 3.0), (0.9, 0.7)] {
        let m = MomentSeries::from_atoms(&[(0.0, 1.0 - alpha), (gamma, alpha)], 10).unwrap();
        let s = s_transform(&m).unwrap();
        let num = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let den: Vec<f64> = [gamma * alpha, gamma].into_iter().chain(std::iter::repeat(0.0)).take(10).collect();
        let closed = series_mul(&num, &series_inv(&den));
        for (a, b) in s.coeffs().iter().zip(&closed) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "alpha={alpha} gamma={gamma}: {a} vs {b}");
        }
    }
}

#[test]
fn point_mass_has_constant_s_transform() {
    let s = s_transform(&MomentSeries::point_mass(2.5, 6).unwrap()).unwrap();
    assert_close(s.constant(), 0.4, 1e-14, "S(0)");
    assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
}

#[test]
fn zero_mean_law_is_rejected() {
    let m = MomentSeries::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)], 4).unwrap();
    assert!(matches!(s_transform(&m), Err(Error::UndefinedTransform { .. })));
}

#[test]
fn convolution_matches_noncrossing_oracle() {
    let laws = [
        vec![(0.0, 0.5), (1.0, 0.5)],
        vec![(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)],
        vec![(0.2, 0.6), (1.5, 0.4)],
    ];
    for a in &laws {
        for b in &laws {
            let ma = MomentSeries::from_atoms(a, 6).unwrap();
            let mb = MomentSeries::from_atoms(b, 6).unwrap();
            let got = free_multiplicative_convolution(&ma, &mb).unwrap();
            let oracle = free_product_moments(&atom_moments(a, 6), &atom_moments(b, 6));
            for k in 1..=6 {
                assert_close(got.moment(k), oracle[k - 1], 1e-10, "⊠ moment");
            }
        }
    }
}

#[test]
fn projections_give_the_arcsine_moments() {
    let b = MomentSeries::from_atoms(&[(0.0, 0.5), (1.0, 0.5)], 8).unwrap();
    let bb = free_multiplicative_convolution(&b, &b).unwrap();
    assert_close(bb.moment(1), 0.25, 1e-14, "m1");
    assert_close(bb.moment(2), 3.0 / 16.0, 1e-14, "m2");
    for n in 1..=8u64 {
        let expect = binomial(2 * n, n) / 2f64.powi(2 * n as i32 + 1);
        assert_close(bb.moment(n as usize), expect, 1e-12, "arcsine");
    }
}

#[test]
fn free_poisson_squared_gives_fuss_catalan() {
    let mp = MomentSeries::new((1..=8).map(catalan).collect()).unwrap();
    let sq = free_multiplicative_convolution(&mp, &mp).unwrap();
    for n in 1..=8u64 {
        let fuss = binomial(3 * n, n) / (2 * n + 1) as f64;
        assert_close(sq.moment(n as usize), fuss, 1e-9, "Fuss-Catalan");
    }
}

#[test]
fn dilation_divides_the_s_transform() {
    let m = MomentSeries::from_atoms(&[(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)], 8).unwrap();
    let s = s_transform(&m).unwrap();
    let s3 = s_transform(&dilate(&m, 3.0)).unwrap();
    for (a, b) in s3.coeffs().iter().zip(s.coeffs()) {
        assert_close(*a, b / 3.0, 1e-12, "S of 3X");
    }
}

#[test]
fn affine_pushforward_of_atoms() {
    let atoms = [(0.5, 0.3), (1.0, 0.7)];
    let m = MomentSeries::from_atoms(&atoms, 5).unwrap();
    let pushed = affine_pushforward(&m, 1.5, -2.0);
    let oracle = atom_moments(&[(1.5 - 1.0, 0.3), (1.5 - 2.0, 0.7)], 5);
    for k in 1..=5 {
        assert_close(pushed.moment(k), oracle[k - 1], 1e-13, "pushforward");
    }
}

#[test]
fn relu_jacobian_prediction_against_noncrossing_oracle() {
    let rule = GaussHermiteRule::default();
    let cfg = MlpConfig::uniform(3, 8, 2f64.sqrt(), Activation::Relu);
    // σ²φ′(h)² is 0 or 2 with probability 1/2 each, at every layer.
    let nu = atom_moments(&[(0.0, 0.5), (2.0, 0.5)], 5);
    let xi1 = predict_xi(&cfg, 1, 5, &rule).unwrap();
    for k in 1..=5 {
        assert_close(xi1.moment(k), 2f64.powi(k as i32 - 1), 1e-12, "ξ₁");
    }
    let xi2 = free_product_moments(&nu, &nu);
    let xi3 = free_product_moments(&xi2, &nu);
    let got = predict_xi(&cfg, 3, 5, &rule).unwrap();
    for k in 1..=5 {
        assert_close(got.moment(k), xi3[k - 1], 1e-10, "ξ₃");
    }
}

#[test]
fn relu_fim_prediction_against_noncrossing_oracle() {
    let rule = GaussHermiteRule::default();
    let cfg = MlpConfig::uniform(3, 8, 2f64.sqrt(), Activation::Relu);
    // r₀ = 1 and r_ℓ² = 1 for σ² = 2; φ′² ∼ Bernoulli(1/2) on {0, 1}.
    let b = atom_moments(&[(0.0, 0.5), (1.0, 0.5)], 5);
    let mu1 = predict_mu(&cfg, 1, 5, &rule).unwrap();
    assert!(mu1.moments().iter().all(|m| (m - 1.0).abs() < 1e-12));
    let mu2 = predict_mu(&cfg, 2, 5, &rule).unwrap();
    let oracle2 = atom_moments(&[(1.0, 0.5), (3.0, 0.5)], 5);
    for k in 1..=5 {
        assert_close(mu2.moment(k), oracle2[k - 1], 1e-11, "μ₂");
    }
    let prod = MomentSeries::new(free_product_moments(&oracle2, &b)).unwrap();
    let oracle3 = affine_pushforward(&prod, 1.0, 2.0);
    let mu3 = predict_mu(&cfg, 3, 5, &rule).unwrap();
    for k in 1..=4 {
        assert_close(mu3.moment(k), oracle3.moment(k), 1e-10, "μ₃");
    }
    assert_close(mu3.moment(1), 3.0, 1e-12, "μ₃ m1");
    assert_close(mu3.moment(2), 14.0, 1e-11, "μ₃ m2");
}

#[test]
fn hard_tanh_prediction_first_moment() {
    // m₁(ξ_ℓ) = Π σ² P(|h_k| < 1).
    let rule = GaussHermiteRule::default();
    let cfg = MlpConfig::uniform(2, 8, 1.0, Activation::HardTanh);
    let profile = freejac::mlp::theory_profile(&cfg, &rule).unwrap();
    let p = |q: f64| libm::erf(1.0 / (2.0 * q).sqrt());
    let xi = predict_xi(&cfg, 2, 3, &rule).unwrap();
    assert_close(xi.moment(1), p(profile.q(1)) * p(profile.q(2)), 1e-9, "ξ₂ m1");
}
