//! Empirical spectral moments of `J_ℓJ_ℓᵀ` or `H_ℓ` against the S-transform
//! predictions.

use serde::{Deserialize, Serialize};

use super::{FreenessReport, ReportRow};
use crate::error::{invalid, Result};
use crate::free_calculus::{predict_mu, predict_xi};
use crate::mlp::{fim_recursion, jacobian_gram, sample_network, MlpConfig};
use crate::par::{try_map_trials, Execution, RunningStats};
use crate::quadrature::GaussHermiteRule;
use crate::rng::SeededRng;
use crate::spectral::trace_moments;

/// Default relative tolerance; [`SE_MULTIPLE`] SE is always allowed too.
pub const RELATIVE_TOLERANCE: f64 = 0.05;
const SE_MULTIPLE: f64 = 3.0;
/// Highest moment order the Monte-Carlo comparison supports.
pub const MAX_PREDICTION_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionTarget {
    /// `J_ℓJ_ℓᵀ` against `ξ_ℓ`.
    Jacobian,
    /// `H_ℓ` against `μ_ℓ`.
    Fim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub layer: usize,
    pub k: usize,
    pub empirical: f64,
    pub standard_error: f64,
    pub theory: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct PredictionOutcome {
    pub report: FreenessReport,
    pub table: Vec<MomentRow>,
}

/// Compares moments `m₁ … m_order` of the target matrix at `layer` with the
/// prediction, at every width of `sweep`. Only the largest width decides the
/// pass flag; a moment passes when within `max(relative_tolerance, 3 SE)`.
#[allow(clippy::too_many_arguments)]
pub fn freeness_moment_prediction_test(
    target: PredictionTarget,
    layer: usize,
    cfg: &MlpConfig,
    sweep: &[usize],
    trials: usize,
    order: usize,
    relative_tolerance: f64,
    rule: &GaussHermiteRule,
    rng: &SeededRng,
    exec: Execution,
) -> Result<PredictionOutcome> {
    cfg.validate()?;
    if order == 0 || order > MAX_PREDICTION_ORDER {
        return invalid(format!("prediction order must be in 1..={MAX_PREDICTION_ORDER}, got {order}"));
    }
    if layer == 0 || layer > cfg.depth {
        return invalid(format!("layer {layer} outside 1..={}", cfg.depth));
    }
    if sweep.is_empty() || trials == 0 {
        return invalid("prediction test needs a width sweep and trials");
    }
    let theory = match target {
        PredictionTarget::Jacobian => predict_xi(cfg, layer, order, rule)?,
        PredictionTarget::Fim => predict_mu(cfg, layer, order, rule)?,
    };
    // Neither target depends on layers past `layer`.
    let sim_cfg = cfg.with_depth(layer)?;

    let name = match target {
        PredictionTarget::Jacobian => "jacobian_moment_prediction",
        PredictionTarget::Fim => "fim_moment_prediction",
    };
    let labels = (1..=order).map(|k| format!("m{k}")).collect();
    let mut report = FreenessReport::new(name, sweep.to_vec(), labels, trials);
    let mut table = Vec::new();
    let last = sweep.len() - 1;
    for (si, &n) in sweep.iter().enumerate() {
        let cfg_n = sim_cfg.with_width(n);
        let srng = rng.substream(si as u64);
        let per_trial = try_map_trials(trials, exec, |t| -> Result<Vec<f64>> {
            let state = sample_network(&cfg_n, &srng.substream(t as u64))?;
            let m = match target {
                PredictionTarget::Jacobian => jacobian_gram(&state, layer)?,
                PredictionTarget::Fim => fim_recursion(&state).pop().expect("depth >= 1"),
            };
            Ok(trace_moments(&m, order)?.moments().to_vec())
        })?;
        for k in 1..=order {
            let st: RunningStats = per_trial.iter().map(|v| v[k - 1]).collect();
            let th = theory.moment(k);
            let diff = (st.mean() - th).abs();
            let rel_err = if th != 0.0 { diff / th.abs() } else { diff };
            let threshold = (relative_tolerance * th.abs()).max(SE_MULTIPLE * st.standard_error());
            let ok = diff <= threshold;
            if si == last && !ok {
                report.fail(format!(
                    "m{k} at N={n}: empirical {:.6} vs theory {th:.6} (|diff| {diff:.3e} > {threshold:.3e})",
                    st.mean()
                ));
            }
            report.push(ReportRow::new(format!("m{k}"), n, st.mean(), st.standard_error(), threshold, ok));
            table.push(MomentRow {
                n,
                layer,
                k,
                empirical: st.mean(),
                standard_error: st.standard_error(),
                theory: th,
                rel_err,
                pass: ok,
            });
        }
    }
    Ok(PredictionOutcome { report, table })
}
