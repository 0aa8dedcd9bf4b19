//! The change of basis `Y`, the fixing rotation `U = Yᵀ (V ⊕ 1) Y`, and the
//! Monte-Carlo check that replacing `W_ℓ` by `W_ℓ U_{ℓ−1}` leaves the joint
//! law of weights and hidden units unchanged.

use serde::{Deserialize, Serialize};

use super::{FreenessReport, ReportRow};
use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix};
use crate::mlp::{sample_network, MlpConfig, NetworkState};
use crate::par::{try_map_trials, Execution, RunningStats};
use crate::rng::{sample_haar_orthogonal, SeededRng};

const NHAT_THRESHOLD: f64 = 1e-12;
const REORTH_THRESHOLD: f64 = 1e-10;
/// Probe differences beyond this many standard errors fail.
const SE_MULTIPLE: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct InvarianceArtifacts {
    /// Rows are the orthonormal basis `f₁ … f_N`, so `Y fₙ = eₙ`.
    pub y: Matrix,
    pub u: Matrix,
    /// `(N−1) × (N−1)` Haar block acting on `x^⊥`.
    pub v: Matrix,
    /// 0-based index of the first coordinate of `x` that is numerically
    /// nonzero.
    pub nhat: usize,
}

/// Builds `Y` by Gram–Schmidt on `(e₁, …, e_{n̂−1}, e_{n̂+1}, …, e_N, x/‖x‖)`
/// taken in reverse order, then `U = Yᵀ diag(V, 1) Y` with `V` Haar from
/// `rng`.
pub fn build_invariance(x: &[f64], rng: &mut SeededRng) -> Result<InvarianceArtifacts> {
    let n = x.len();
    if n < 2 {
        return invalid("invariance construction needs N >= 2");
    }
    let norm = norm2(x);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    let nhat = x
        .iter()
        .position(|v| v.abs() > NHAT_THRESHOLD * norm)
        .ok_or(Error::ZeroVector)?;

    // basis[k] = f_{k+1}; filled from the back.
    let mut basis: Vec<Vec<f64>> = vec![Vec::new(); n];
    basis[n - 1] = x.iter().map(|v| v / norm).collect();
    let mut slot = n - 1;
    for m in (0..n).rev().filter(|&m| m != nhat) {
        slot -= 1;
        let mut w = vec![0.0; n];
        w[m] = 1.0;
        orthogonalize(&mut w, &basis[slot + 1..]);
        let wn = norm2(&w);
        w.iter_mut().for_each(|v| *v /= wn);
        basis[slot] = w;
    }
    let y = Matrix::from_fn(n, n, |i, j| basis[i][j]);

    let v = sample_haar_orthogonal(rng, n - 1)?;
    let mut block = v.embed(n, n);
    block.set(n - 1, n - 1, 1.0);
    let u = y.t_matmul(&block.matmul(&y));
    Ok(InvarianceArtifacts { y, u, v, nhat })
}

/// Modified Gram–Schmidt against orthonormal `against`, repeated once when
/// the first pass leaves a residual overlap above the threshold.
fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for f in against {
        let p = dot(w, f);
        axpy(-p, f, w);
    }
    let wn = norm2(w);
    let overlap = against.iter().map(|f| dot(w, f).abs()).fold(0.0, f64::max);
    if overlap > REORTH_THRESHOLD * wn {
        for f in against {
            let p = dot(w, f);
            axpy(-p, f, w);
        }
    }
}

/// What replaces `U_{ℓ−1}` in the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceMode {
    /// `U_{ℓ−1}` fixes `x^{ℓ−1}`: the construction above.
    #[default]
    Fixing,
    /// Negative control: an independent Haar rotation that does not fix
    /// `x^{ℓ−1}`; the joint probe should detect the difference.
    NonFixingControl,
}

pub const PROBE_NAMES: [&str; 5] = ["trace", "entry", "entry_sq", "joint_hidden", "characteristic"];

/// Fixed probe matrix `T` with unit Frobenius norm.
fn probe_matrix(n: usize) -> Matrix {
    let t = Matrix::from_fn(n, n, |i, j| ((i * 7 + j * 13 + 1) as f64 * 0.61).sin());
    let f = t.frobenius_norm();
    t.scale(1.0 / f)
}

/// Fixed unit probe vector `ξ`.
fn probe_vector(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| ((i * 5 + 2) as f64 * 0.83).cos()).collect();
    let nv = norm2(&v);
    v.into_iter().map(|x| x / nv).collect()
}

/// Probe values for weight `w` (standing for `W_ℓ` or `W_ℓU_{ℓ−1}`) at layer
/// `l`, in [`PROBE_NAMES`] order.
fn probes(state: &NetworkState, l: usize, w: &Matrix, sigma: f64, t: &Matrix, xi: &[f64]) -> [f64; 5] {
    let n = state.width() as f64;
    let trace = dot(t.as_slice(), w.as_slice()) / sigma;
    let entry = w.get(0, 0) * n.sqrt() / sigma;
    let wx = w.matvec(state.post(l - 1));
    let joint = dot(xi, &wx) * dot(xi, state.pre(l)) / (sigma * sigma);
    let last = state.depth();
    let tail = dot(xi, state.pre(last));
    let characteristic = (trace + tail).cos();
    [trace, entry, entry * entry, joint, characteristic]
}

/// Two-sample comparison of probe statistics of `(W_ℓU_{ℓ−1}, h)` against
/// `(W_ℓ, h)`. A probe passes when the difference of means is within
/// 4 combined standard errors; the report passes when every probe does.
pub fn invariance_statistical_test(
    cfg: &MlpConfig,
    trials: usize,
    rng: &SeededRng,
    mode: InvarianceMode,
    exec: Execution,
) -> Result<FreenessReport> {
    cfg.validate()?;
    if trials < 2 {
        return invalid("invariance test needs at least 2 trials");
    }
    let n = cfg.width;
    let big_l = cfg.depth;
    let t = probe_matrix(n);
    let xi = probe_vector(n);

    // Per trial: for each layer, (original probes, modified probes).
    let per_trial = try_map_trials(trials, exec, |trial| -> Result<Vec<([f64; 5], [f64; 5])>> {
        let trng = rng.substream(trial as u64);
        let state = sample_network(cfg, &trng.substream(0))?;
        let urng = trng.substream(1);
        (1..=big_l)
            .map(|l| {
                let mut lrng = urng.substream(l as u64);
                let u = match mode {
                    InvarianceMode::Fixing => build_invariance(state.post(l - 1), &mut lrng)?.u,
                    InvarianceMode::NonFixingControl => sample_haar_orthogonal(&mut lrng, n)?,
                };
                let w = state.weight(l);
                let sigma = cfg.sigma_w[l - 1];
                let orig = probes(&state, l, w, sigma, &t, &xi);
                let modified = probes(&state, l, &w.matmul(&u), sigma, &t, &xi);
                Ok((orig, modified))
            })
            .collect()
    })?;

    let name = match mode {
        InvarianceMode::Fixing => "invariance",
        InvarianceMode::NonFixingControl => "invariance_negative_control",
    };
    let mut report = FreenessReport::new(name, vec![n], PROBE_NAMES.iter().map(|s| s.to_string()).collect(), trials);
    for l in 1..=big_l {
        for (p, probe) in PROBE_NAMES.iter().enumerate() {
            let a: RunningStats = per_trial.iter().map(|v| v[l - 1].0[p]).collect();
            let b: RunningStats = per_trial.iter().map(|v| v[l - 1].1[p]).collect();
            let diff = (b.mean() - a.mean()).abs();
            let se = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
            let ok = diff <= SE_MULTIPLE * se;
            let label = format!("layer{l}/{probe}");
            if !ok {
                report.fail(format!("{label}: |diff| = {diff:.3e} exceeds {SE_MULTIPLE} SE = {:.3e}", SE_MULTIPLE * se));
            }
            report.push(ReportRow::new(label, n, diff, se, SE_MULTIPLE * se, ok));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixes_x_and_is_orthogonal() {
        let mut rng = SeededRng::new(3, 0);
        let x: Vec<f64> = rng.normal_vec(20);
        let art = build_invariance(&x, &mut rng).unwrap();
        let ux = art.u.matvec(&x);
        let err: f64 = ux.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-10 * norm2(&x));
        assert!(art.y.orthogonality_defect() < 1e-12);
        assert!(art.u.orthogonality_defect() < 1e-12);
        let yx = art.y.matvec(&x);
        assert!((yx[19] - norm2(&x)).abs() < 1e-10 * norm2(&x));
        assert_eq!(art.nhat, 0);
    }

    #[test]
    fn zero_vector_rejected() {
        let mut rng = SeededRng::new(3, 0);
        assert!(matches!(build_invariance(&[0.0; 4], &mut rng), Err(Error::ZeroVector)));
    }
}
