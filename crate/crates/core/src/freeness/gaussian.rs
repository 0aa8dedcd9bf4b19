//! Empirical law of hidden units against `N(0, q_ℓ)`.

use super::{FreenessReport, ReportRow};
use crate::error::{invalid, Result};
use crate::mlp::{propagate_hidden, theory_profile, MlpConfig};
use crate::par::{try_map_trials, Execution, RunningStats};
use crate::quadrature::GaussHermiteRule;
use crate::rng::SeededRng;
use crate::spectral::ks_distance_to_gaussian;

/// Default bound on the KS distance of every seed at the largest width.
pub const KS_THRESHOLD: f64 = 0.05;

/// KS distance between the entries of `h^ℓ` and `N(0, q_ℓ)` for every layer,
/// width in `sweep` and seed. Passes when every seed at the largest width is
/// below `threshold` and, per layer, the mean distance at the largest
/// width is strictly below the mean at the smallest.
pub fn gaussian_propagation_test(
    cfg: &MlpConfig,
    sweep: &[usize],
    seeds: usize,
    threshold: f64,
    rule: &GaussHermiteRule,
    rng: &SeededRng,
    exec: Execution,
) -> Result<FreenessReport> {
    cfg.validate()?;
    if sweep.is_empty() || seeds == 0 {
        return invalid("propagation test needs a width sweep and seeds");
    }
    let profile = theory_profile(cfg, rule)?;
    let big_l = cfg.depth;
    let labels = (1..=big_l).map(|l| format!("layer{l}")).collect();
    let mut report = FreenessReport::new("gaussian_propagation", sweep.to_vec(), labels, seeds);
    // ks[sweep index][layer − 1]
    let mut ks: Vec<Vec<RunningStats>> = Vec::new();
    let mut worst: Vec<Vec<f64>> = Vec::new();
    for (si, &n) in sweep.iter().enumerate() {
        let cfg_n = cfg.with_width(n);
        let srng = rng.substream(si as u64);
        let per_seed = try_map_trials(seeds, exec, |s| -> Result<Vec<f64>> {
            let hs = propagate_hidden(&cfg_n, &srng.substream(s as u64))?;
            hs.iter()
                .enumerate()
                .map(|(l, h)| ks_distance_to_gaussian(h, 0.0, profile.q[l]))
                .collect()
        })?;
        ks.push((0..big_l).map(|l| per_seed.iter().map(|v| v[l]).collect()).collect());
        worst.push((0..big_l).map(|l| per_seed.iter().map(|v| v[l]).fold(0.0, f64::max)).collect());
    }
    let last = sweep.len() - 1;
    for l in 0..big_l {
        for (si, &n) in sweep.iter().enumerate() {
            let st = &ks[si][l];
            let ok = si != last || worst[si][l] < threshold;
            report.push(ReportRow::new(format!("layer{}", l + 1), n, st.mean(), st.standard_error(), threshold, ok));
        }
        if worst[last][l] >= threshold {
            report.fail(format!(
                "layer {}: worst KS {:.4} at N={} is not below {threshold}",
                l + 1,
                worst[last][l],
                sweep[last]
            ));
        }
        if sweep.len() > 1 && ks[last][l].mean() >= ks[0][l].mean() {
            report.fail(format!(
                "layer {}: mean KS does not shrink from N={} ({:.4}) to N={} ({:.4})",
                l + 1,
                sweep[0],
                ks[0][l].mean(),
                sweep[last],
                ks[last][l].mean()
            ));
        }
    }
    Ok(report)
}
