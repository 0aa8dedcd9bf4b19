mod common;

use common::*;
use freejac::freeness::{
    alternating_freeness_test, build_invariance, cutoff_orthogonal_approx, cutoff_trace_check,
    gaussian_propagation_test, invariance_statistical_test, InvarianceMode, Letter, Word,
};
use freejac::linalg::{norm2, Matrix};
use freejac::par::Execution;
use freejac::quadrature::GaussHermiteRule;
use freejac::rng::sample_haar_orthogonal;
use freejac::{Activation, Error, MlpConfig, SeededRng};

#[test]
fn words_parse_and_print() {
    for s in ["W1 D1^2 W1t D1^2", "W2W2t D2^3", "WJJW2 D2^2 WJJW2 D2^2", "H3 D3^2", "JJ1 D1^1"] {
        assert_eq!(Word::parse(s).unwrap().to_string(), s);
    }
    assert_eq!("D2".parse::<Letter>().unwrap(), Letter::D { layer: 2, power: 1 });
    assert_eq!("W3t".parse::<Letter>().unwrap(), Letter::W { layer: 3, transpose: true });
    assert_eq!(Word::parse("W1 D1^2 W2t").unwrap().max_layer(), 2);
    // Adjacent letters of one family only pass the unchecked parser.
    assert!(matches!(Word::parse("D1^2 D1^4"), Err(Error::MalformedWord(_))));
    assert!(Word::parse_unchecked("D1^2 D1^4").is_ok());
    for bad in ["", "X1", "W0", "D1^0", "W1W2t", "D1^x"] {
        assert!(Word::parse(bad).is_err(), "{bad:?}");
    }
}

#[test]
fn invariance_rotation_fixes_the_vector() {
    let mut rng = SeededRng::new(2, 0);
    let x: Vec<f64> = (0..12).map(|i| if i < 3 { 0.0 } else { (i as f64).cos() }).collect();
    let art = build_invariance(&x, &mut rng).unwrap();
    assert_eq!(art.nhat, 3);
    assert!(art.y.orthogonality_defect() < 1e-12);
    assert!(art.u.orthogonality_defect() < 1e-12);
    assert!(art.v.orthogonality_defect() < 1e-12);
    let ux = art.u.matvec(&x);
    assert!(ux.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
    // The last basis vector is x / ‖x‖.
    let nx = norm2(&x);
    assert!((0..12).all(|j| (art.y.get(11, j) - x[j] / nx).abs() < 1e-14));
    assert!(matches!(build_invariance(&[0.0; 5], &mut rng), Err(Error::ZeroVector)));
    assert!(build_invariance(&[1.0], &mut rng).is_err());
}

#[test]
fn invariance_fixing_passes_and_control_fails() {
    let cfg = MlpConfig::uniform(2, 8, 1.2, Activation::Tanh);
    let rng = SeededRng::new(10, 0);
    let fixing = invariance_statistical_test(&cfg, 3000, &rng.substream(0), InvarianceMode::Fixing, Execution::Parallel)
        .unwrap();
    assert!(fixing.pass, "{:?}", fixing.failures);
    let control =
        invariance_statistical_test(&cfg, 3000, &rng.substream(1), InvarianceMode::NonFixingControl, Execution::Parallel)
            .unwrap();
    assert!(!control.pass);
    assert!(invariance_statistical_test(&cfg, 1, &rng, InvarianceMode::Fixing, Execution::Parallel).is_err());
}

#[test]
fn cutoff_trace_of_identities() {
    // tr_N of the compressed product loses exactly one diagonal entry.
    for n in [4, 50] {
        let eyes = vec![Matrix::identity(n); 3];
        let r = cutoff_trace_check(&eyes, None).unwrap();
        assert_close(r.lhs, 1.0 / n as f64, 1e-14, "lhs");
        assert_close(r.c, 1.0, 1e-14, "C");
        assert_close(r.bound, 3.0 / (n as f64).cbrt(), 1e-14, "bound");
        assert!(r.holds);
    }
    assert!(cutoff_trace_check(&[], None).is_err());
    assert!(cutoff_trace_check(&[Matrix::identity(3), Matrix::identity(4)], None).is_err());
    assert!(cutoff_trace_check(&[Matrix::identity(3)], Some(-1.0)).is_err());
}

#[test]
fn cutoff_trace_holds_for_haar_products() {
    let mut rng = SeededRng::new(4, 0);
    for n in [16, 64] {
        let qs: Vec<Matrix> = (0..4).map(|_| sample_haar_orthogonal(&mut rng, n).unwrap()).collect();
        let r = cutoff_trace_check(&qs, Some(1.0)).unwrap();
        assert!(r.holds, "N={n}: {} > {}", r.lhs, r.bound);
    }
}

#[test]
fn orthogonal_corner_error_has_a_closed_form() {
    // The (N−1) corner of an orthogonal W has singular values 1 (N−2 times)
    // and |w_NN|, so the normalized error is (1 − |w_NN|)(N−1)^{−1/p}.
    let mut rng = SeededRng::new(6, 0);
    for n in [5, 40] {
        let w = sample_haar_orthogonal(&mut rng, n).unwrap();
        let wnn = w.get(n - 1, n - 1).abs();
        for p in [1, 2, 4] {
            let r = cutoff_orthogonal_approx(&w, p).unwrap();
            let expect = (1.0 - wnn) * ((n - 1) as f64).powf(-1.0 / p as f64);
            assert_close(r.error, expect, 1e-12, "corner error");
            assert!(r.holds);
            assert!(r.approx.orthogonality_defect() < 1e-12);
        }
    }
    assert!(cutoff_orthogonal_approx(&Matrix::identity(3), 0).is_err());
    assert!(cutoff_orthogonal_approx(&Matrix::identity(1), 2).is_err());
}

#[test]
fn alternating_words_decay_and_controls_do_not() {
    let cfg = MlpConfig::uniform(2, 8, 2f64.sqrt(), Activation::Relu);
    let words = vec![Word::parse("W1 D1^2 W1t D1^2").unwrap()];
    let controls = vec![Word::parse_unchecked("D1^2 D1^4").unwrap()];
    let r = alternating_freeness_test(
        &words,
        &controls,
        &cfg,
        &[64, 256],
        8,
        0.05,
        &SeededRng::new(3, 0),
        Execution::Parallel,
    )
    .unwrap();
    assert!(r.pass, "{:?}", r.failures);
    // relu: D₁² = D₁⁴ is 0 or 1 with mean 1/2, so the centred letters are
    // ±1/2 and the control trace is 1/4.
    for row in r.rows_for("control: D1^2 D1^4") {
        assert!((row.statistic - 0.25).abs() < 4.0 * row.standard_error + 0.02, "{row:?}");
    }
    let deep = vec![Word::parse("W3 D3^2").unwrap()];
    let err = alternating_freeness_test(&deep, &[], &cfg, &[8], 1, 0.05, &SeededRng::new(0, 0), Execution::Parallel);
    assert!(matches!(err, Err(Error::MalformedWord(_))));
}

#[test]
fn hidden_units_become_gaussian() {
    let cfg = MlpConfig::uniform(2, 8, 1.3, Activation::Tanh);
    let rule = GaussHermiteRule::default();
    let r =
        gaussian_propagation_test(&cfg, &[64, 2048], 3, 0.06, &rule, &SeededRng::new(5, 0), Execution::Parallel)
            .unwrap();
    assert!(r.pass, "{:?}", r.failures);
    let tight =
        gaussian_propagation_test(&cfg, &[64, 2048], 3, 1e-6, &rule, &SeededRng::new(5, 0), Execution::Parallel)
            .unwrap();
    assert!(!tight.pass);
}
