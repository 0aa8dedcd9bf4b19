//! One function per harness command. Each returns its failures, a JSON
//! results payload and the tables to write; no I/O happens here.

use serde_json::{json, Map, Value};

use super::config::{Command, ExperimentConfig, SpectrumTarget, Variant};
use super::report::{Cell, Table};
use crate::activations::derivative_square_moments;
use crate::error::{Error, Result};
use crate::free_calculus::{free_multiplicative_convolution, moments_from_s, predict_mu, predict_xi, s_transform};
use crate::freeness::{
    alternating_freeness_test, cutoff_orthogonal_approx, cutoff_trace_check, freeness_moment_prediction_test,
    gaussian_propagation_test, invariance_statistical_test, FreenessReport, InvarianceMode, MomentRow,
    PredictionTarget, Word,
};
use crate::linalg::{schatten_from_singular_values, singular_values, svd, symmetric_eigen, symmetric_eigenvalues};
use crate::mlp::{
    delta_chain_sum, fim_dual, fim_recursion, jacobian_gram, parameter_jacobian_oracle, sample_network,
    theory_profile, ORACLE_MAX_WIDTH,
};
use crate::par::{try_map_trials, Execution, RunningStats};
use crate::quadrature::GaussHermiteRule;
use crate::rng::{sample_gaussian_matrix, sample_haar_frame, sample_haar_orthogonal, SeededRng};
use crate::series::MomentSeries;
use crate::spectral::histogram_of_values;

/// Largest `L·N²` for which the conditional FIM is diagonalized densely.
pub const DUAL_EIGEN_MAX_DIM: usize = 3072;
/// Relative accuracy demanded of the dense linear-algebra kernels.
pub const LINALG_TOLERANCE: f64 = 1e-10;
/// S-transform round trips must be exact to this (relative to `max(1, |m_k|)`).
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-10;
/// Coefficientwise tolerance for closed-form S-transforms.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;
const ORACLE_SE_MULTIPLE: f64 = 3.0;

#[derive(Debug, Default)]
pub struct CommandOutput {
    pub failures: Vec<String>,
    pub results: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl CommandOutput {
    fn absorb(&mut self, label: &str, report: &FreenessReport) {
        self.failures
            .extend(report.failures.iter().map(|f| format!("{label}/{}: {f}", report.test_name)));
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    rule: GaussHermiteRule,
    root: SeededRng,
    exec: Execution,
}

impl Ctx<'_> {
    /// `base` alone for a single variant, `base_<label>` otherwise.
    fn table_name(&self, base: &str, v: &Variant) -> String {
        if self.cfg.variants.len() == 1 {
            base.to_string()
        } else {
            format!("{base}_{}", v.label)
        }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let ctx = Ctx {
        cfg,
        rule: GaussHermiteRule::new(cfg.quadrature_order)?,
        root: SeededRng::new(cfg.seed, 0),
        exec: cfg.execution,
    };
    match cfg.command {
        Command::SimulateSpectrum => simulate_spectrum(&ctx),
        Command::TheoryProfile => theory_profile_cmd(&ctx),
        Command::PredictVsEmpirical => predict_vs_empirical(&ctx),
        Command::VerifyFreeness => verify_freeness(&ctx),
        Command::VerifyInvariance => verify_invariance(&ctx),
        Command::VerifyCutoff => verify_cutoff(&ctx),
        Command::GaussianPropagation => gaussian_propagation(&ctx),
        Command::FimDuality => fim_duality(&ctx),
        Command::VerifyLinalg => verify_linalg(&ctx),
        Command::VerifySTransform => verify_s_transform(&ctx),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn moment_cells(m: &MomentSeries) -> Vec<f64> {
    m.moments().to_vec()
}

fn simulate_spectrum(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let order = cfg.moment_order;
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let layer = cfg.layer.unwrap_or(v.mlp.depth);
        let theory = match cfg.target {
            SpectrumTarget::Jacobian => Some(predict_xi(&v.mlp, layer, order, &ctx.rule)?),
            SpectrumTarget::Fim => Some(predict_mu(&v.mlp, layer, order, &ctx.rule)?),
            SpectrumTarget::FimDual | SpectrumTarget::ConditionalFim => None,
        };
        let shown_layer = match cfg.target {
            SpectrumTarget::Jacobian | SpectrumTarget::Fim => layer,
            SpectrumTarget::FimDual | SpectrumTarget::ConditionalFim => v.mlp.depth,
        };
        let vrng = ctx.root.substream(vi as u64);
        let mut spectrum = Table::new(ctx.table_name("spectrum", v), &["layer", "n", "trial", "index", "eigenvalue"]);
        let mut hist = Table::new(
            ctx.table_name("histogram", v),
            &["layer", "n", "lower", "upper", "count", "density"],
        );
        let mut moments = Table::new(
            ctx.table_name("moments", v),
            &["layer", "n", "k", "empirical", "standard_error", "theory"],
        );
        let mut summary = Vec::new();
        for (si, &n) in cfg.sweep.iter().enumerate() {
            if cfg.target == SpectrumTarget::ConditionalFim && n > ORACLE_MAX_WIDTH {
                return Err(Error::EnvelopeExceeded { n, max: ORACLE_MAX_WIDTH });
            }
            let cfg_n = v.mlp.with_width(n);
            let srng = vrng.substream(si as u64);
            let spectra = try_map_trials(cfg.trials, ctx.exec, |t| -> Result<Vec<f64>> {
                let state = sample_network(&cfg_n, &srng.substream(t as u64))?;
                let m = match cfg.target {
                    SpectrumTarget::Jacobian => jacobian_gram(&state, layer)?,
                    SpectrumTarget::Fim => fim_recursion(&state).swap_remove(layer - 1),
                    SpectrumTarget::FimDual => fim_dual(&state),
                    SpectrumTarget::ConditionalFim => {
                        let j = parameter_jacobian_oracle(&state)?;
                        let mut g = j.t_matmul(&j).scale(1.0 / n as f64);
                        g.symmetrize_in_place();
                        g
                    }
                };
                symmetric_eigenvalues(&m)
            })?;
            for (t, eig) in spectra.iter().enumerate() {
                for (i, &e) in eig.iter().enumerate() {
                    spectrum.push(vec![shown_layer.into(), n.into(), t.into(), i.into(), e.into()]);
                }
            }
            let pooled: Vec<f64> = spectra.iter().flatten().copied().collect();
            let h = histogram_of_values(&pooled, cfg.bins)?;
            for b in 0..h.counts.len() {
                let width = h.edges[b + 1] - h.edges[b];
                let density = h.counts[b] as f64 / (h.total as f64 * width);
                hist.push(vec![
                    shown_layer.into(),
                    n.into(),
                    h.edges[b].into(),
                    h.edges[b + 1].into(),
                    h.counts[b].into(),
                    density.into(),
                ]);
            }
            let per_trial: Vec<MomentSeries> = spectra
                .iter()
                .map(|e| MomentSeries::of_samples(e, order))
                .collect::<Result<_>>()?;
            let mut means = Vec::with_capacity(order);
            for k in 1..=order {
                let st: RunningStats = per_trial.iter().map(|m| m.moment(k)).collect();
                means.push(st.mean());
                moments.push(vec![
                    shown_layer.into(),
                    n.into(),
                    k.into(),
                    st.mean().into(),
                    st.standard_error().into(),
                    theory.as_ref().map(|t| t.moment(k)).into(),
                ]);
            }
            let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                out.failures.push(format!("{}: non-finite eigenvalues at N={n}", v.label));
            }
            summary.push(json!({ "n": n, "min": lo, "max": hi, "moments": means }));
        }
        out.results.insert(
            v.label.clone(),
            json!({
                "target": cfg.target,
                "layer": shown_layer,
                "theory": theory.as_ref().map(moment_cells),
                "sweep": summary,
            }),
        );
        out.tables.extend([spectrum, hist, moments]);
    }
    Ok(out)
}

fn theory_profile_cmd(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let order = cfg.moment_order;
    let mut out = CommandOutput::default();
    for v in &cfg.variants {
        let mlp = &v.mlp;
        let profile = theory_profile(mlp, &ctx.rule)?;
        let mut prof = Table::new(ctx.table_name("profile", v), &["layer", "q", "r", "r_squared"]);
        prof.push(vec![0usize.into(), Cell::Empty, profile.r(0).into(), profile.r2(0).into()]);
        let mut series = Table::new(ctx.table_name("series", v), &["layer", "k", "nu", "xi", "mu"]);
        let mut layers = Vec::new();
        for l in 1..=mlp.depth {
            prof.push(vec![l.into(), profile.q(l).into(), profile.r(l).into(), profile.r2(l).into()]);
            let nu = derivative_square_moments(mlp.activation(l), profile.q(l), order, &ctx.rule)?;
            let xi = predict_xi(mlp, l, order, &ctx.rule)?;
            let mu = predict_mu(mlp, l, order, &ctx.rule)?;
            for k in 1..=order {
                series.push(vec![l.into(), k.into(), nu.moment(k).into(), xi.moment(k).into(), mu.moment(k).into()]);
            }
            layers.push(json!({
                "layer": l,
                "nu": moment_cells(&nu),
                "xi": moment_cells(&xi),
                "mu": moment_cells(&mu),
            }));
        }
        out.results
            .insert(v.label.clone(), json!({ "q": profile.q, "r": profile.r, "layers": layers }));
        out.tables.extend([prof, series]);
    }
    Ok(out)
}

fn moment_table(name: String) -> Table {
    Table::new(name, &["layer", "k", "empirical", "theory", "rel_err"])
}

fn push_moment_row(t: &mut Table, r: &MomentRow) {
    t.push(vec![r.layer.into(), r.k.into(), r.empirical.into(), r.theory.into(), r.rel_err.into()]);
}

fn detail_table(name: String) -> Table {
    Table::new(
        name,
        &["target", "n", "layer", "k", "empirical", "standard_error", "theory", "rel_err", "pass"],
    )
}

fn push_detail_row(t: &mut Table, target: &str, r: &MomentRow) {
    t.push(vec![
        target.into(),
        r.n.into(),
        r.layer.into(),
        r.k.into(),
        r.empirical.into(),
        r.standard_error.into(),
        r.theory.into(),
        r.rel_err.into(),
        r.pass.into(),
    ]);
}

fn predict_vs_empirical(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let largest = *cfg.sweep.last().expect("nonempty sweep");
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let vrng = ctx.root.substream(vi as u64);
        let layers: Vec<usize> = match cfg.layer {
            Some(l) => vec![l],
            None => (1..=v.mlp.depth).collect(),
        };
        let mut detail = detail_table(ctx.table_name("detail", v));
        let mut payload = Map::new();
        for (ti, (target, name)) in [(PredictionTarget::Jacobian, "jacobian"), (PredictionTarget::Fim, "fim")]
            .into_iter()
            .enumerate()
        {
            let mut table = moment_table(ctx.table_name(name, v));
            let mut reports = Vec::new();
            for &l in &layers {
                let outcome = freeness_moment_prediction_test(
                    target,
                    l,
                    &v.mlp,
                    &cfg.sweep,
                    cfg.trials,
                    cfg.moment_order,
                    cfg.tolerances.relative,
                    &ctx.rule,
                    &vrng.substream(ti as u64).substream(l as u64),
                    ctx.exec,
                )?;
                for r in &outcome.table {
                    if r.n == largest {
                        push_moment_row(&mut table, r);
                    }
                    push_detail_row(&mut detail, name, r);
                }
                out.absorb(&format!("{}/layer{l}", v.label), &outcome.report);
                reports.push(to_value(&outcome.report));
            }
            payload.insert(name.to_string(), Value::Array(reports));
            out.tables.push(table);
        }
        out.tables.push(detail);
        out.results.insert(v.label.clone(), Value::Object(payload));
    }
    Ok(out)
}

fn report_table(name: String) -> Table {
    Table::new(name, &["label", "n", "statistic", "standard_error", "threshold", "pass"])
}

fn push_report_rows(t: &mut Table, report: &FreenessReport) {
    for r in &report.rows {
        t.push(vec![
            r.label.clone().into(),
            r.n.into(),
            r.statistic.into(),
            r.standard_error.into(),
            r.threshold.into(),
            r.pass.into(),
        ]);
    }
}

fn verify_freeness(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let words: Vec<Word> = cfg.words.iter().map(|w| Word::parse(w)).collect::<Result<_>>()?;
    let controls: Vec<Word> = cfg
        .control_words
        .iter()
        .map(|w| Word::parse_unchecked(w))
        .collect::<Result<_>>()?;
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let report = alternating_freeness_test(
            &words,
            &controls,
            &v.mlp,
            &cfg.sweep,
            cfg.trials,
            cfg.tolerances.freeness,
            &ctx.root.substream(vi as u64),
            ctx.exec,
        )?;
        let mut table = report_table(ctx.table_name("statistics", v));
        push_report_rows(&mut table, &report);
        out.absorb(&v.label, &report);
        out.results.insert(v.label.clone(), to_value(&report));
        out.tables.push(table);
    }
    Ok(out)
}

fn verify_invariance(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let vrng = ctx.root.substream(vi as u64);
        let mut table = Table::new(
            ctx.table_name("probes", v),
            &["mode", "label", "n", "difference", "standard_error", "threshold", "within"],
        );
        let mut runs = Vec::new();
        for (si, &n) in cfg.sweep.iter().enumerate() {
            let cfg_n = v.mlp.with_width(n);
            let srng = vrng.substream(si as u64);
            let fixing =
                invariance_statistical_test(&cfg_n, cfg.trials, &srng.substream(0), InvarianceMode::Fixing, ctx.exec)?;
            let control = invariance_statistical_test(
                &cfg_n,
                cfg.trials,
                &srng.substream(1),
                InvarianceMode::NonFixingControl,
                ctx.exec,
            )?;
            for (mode, rep) in [("fixing", &fixing), ("control", &control)] {
                for r in &rep.rows {
                    table.push(vec![
                        mode.into(),
                        r.label.clone().into(),
                        r.n.into(),
                        r.statistic.into(),
                        r.standard_error.into(),
                        r.threshold.into(),
                        r.pass.into(),
                    ]);
                }
            }
            out.absorb(&v.label, &fixing);
            if control.pass {
                out.failures.push(format!(
                    "{}: negative control at N={n} was not detected by any probe",
                    v.label
                ));
            }
            runs.push(json!({ "n": n, "fixing": to_value(&fixing), "control": to_value(&control) }));
        }
        out.results.insert(v.label.clone(), Value::Array(runs));
        out.tables.push(table);
    }
    Ok(out)
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

fn verify_cutoff(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let mut out = CommandOutput::default();
    let mut trace = Table::new(
        "trace",
        &[
            "factors",
            "n",
            "instances",
            "max_lhs",
            "mean_lhs",
            "bound",
            "displayed_bound",
            "holds_fraction",
            "displayed_holds_fraction",
        ],
    );
    let mut approx = Table::new(
        "orthogonal",
        &["p", "n", "instances", "max_error", "mean_error", "bound", "holds_fraction"],
    );
    let trace_rng = ctx.root.substream(0);
    let approx_rng = ctx.root.substream(1);
    let mut trace_json = Vec::new();
    let mut approx_json = Vec::new();
    for (si, &n) in cfg.sweep.iter().enumerate() {
        for &k in &cfg.factors {
            let krng = trace_rng.substream(si as u64).substream(k as u64);
            // Haar factors have every normalized Schatten norm equal to 1.
            let checks = try_map_trials(cfg.trials, ctx.exec, |t| {
                let mut r = krng.substream(t as u64);
                let xs = (0..k)
                    .map(|_| sample_haar_orthogonal(&mut r, n))
                    .collect::<Result<Vec<_>>>()?;
                cutoff_trace_check(&xs, Some(1.0))
            })?;
            let holds = checks.iter().filter(|c| c.holds).count();
            let displayed = checks.iter().filter(|c| c.lhs <= c.displayed_bound).count();
            let lhs: RunningStats = checks.iter().map(|c| c.lhs).collect();
            let max_lhs = checks.iter().map(|c| c.lhs).fold(0.0, f64::max);
            let bound = checks[0].bound;
            if holds != checks.len() {
                out.failures.push(format!(
                    "trace cutoff with {k} factors at N={n}: bound held on {holds}/{} instances",
                    checks.len()
                ));
            }
            trace.push(vec![
                k.into(),
                n.into(),
                checks.len().into(),
                max_lhs.into(),
                lhs.mean().into(),
                bound.into(),
                checks[0].displayed_bound.into(),
                fraction(holds, checks.len()).into(),
                fraction(displayed, checks.len()).into(),
            ]);
            trace_json.push(json!({
                "factors": k, "n": n, "max_lhs": max_lhs, "mean_lhs": lhs.mean(), "bound": bound,
                "holds_fraction": fraction(holds, checks.len()),
                "displayed_holds_fraction": fraction(displayed, checks.len()),
            }));
        }

        let wrng = approx_rng.substream(si as u64);
        // One SVD per instance serves every exponent.
        let per_instance = try_map_trials(cfg.trials, ctx.exec, |t| -> Result<Vec<(f64, f64, bool)>> {
            let w = sample_haar_orthogonal(&mut wrng.substream(t as u64), n)?;
            let base = cutoff_orthogonal_approx(&w, cfg.schatten_p[0])?;
            Ok(cfg
                .schatten_p
                .iter()
                .map(|&p| {
                    let e = schatten_from_singular_values(&base.residual_singular_values, p, n - 1);
                    let b = ((n - 1) as f64).powf(-1.0 / p as f64);
                    (e, b, e <= b * (1.0 + 1e-12))
                })
                .collect())
        })?;
        for (pi, &p) in cfg.schatten_p.iter().enumerate() {
            let holds = per_instance.iter().filter(|v| v[pi].2).count();
            let err: RunningStats = per_instance.iter().map(|v| v[pi].0).collect();
            let max_err = per_instance.iter().map(|v| v[pi].0).fold(0.0, f64::max);
            let bound = per_instance[0][pi].1;
            if holds != per_instance.len() {
                out.failures.push(format!(
                    "orthogonal approximation (p={p}) at N={n}: bound held on {holds}/{} instances",
                    per_instance.len()
                ));
            }
            approx.push(vec![
                p.into(),
                n.into(),
                per_instance.len().into(),
                max_err.into(),
                err.mean().into(),
                bound.into(),
                fraction(holds, per_instance.len()).into(),
            ]);
            approx_json.push(json!({
                "p": p, "n": n, "max_error": max_err, "mean_error": err.mean(), "bound": bound,
                "holds_fraction": fraction(holds, per_instance.len()),
            }));
        }
    }
    out.results.insert("trace".into(), Value::Array(trace_json));
    out.results.insert("orthogonal".into(), Value::Array(approx_json));
    out.tables.extend([trace, approx]);
    Ok(out)
}

fn gaussian_propagation(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let report = gaussian_propagation_test(
            &v.mlp,
            &cfg.sweep,
            cfg.trials,
            cfg.tolerances.ks,
            &ctx.rule,
            &ctx.root.substream(vi as u64),
            ctx.exec,
        )?;
        let mut table = report_table(ctx.table_name("ks", v));
        push_report_rows(&mut table, &report);
        out.absorb(&v.label, &report);
        out.results.insert(v.label.clone(), to_value(&report));
        out.tables.push(table);
    }
    Ok(out)
}

fn fim_duality(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances.identity;
    let mut out = CommandOutput::default();
    for (vi, v) in cfg.variants.iter().enumerate() {
        let big_l = v.mlp.depth;
        let vrng = ctx.root.substream(vi as u64);
        let mut ids = Table::new(ctx.table_name("identities", v), &["check", "n", "error", "threshold", "pass"]);
        let mut eig_table = Table::new(
            ctx.table_name("eigenvalues", v),
            &["n", "index", "conditional_fim", "dual", "abs_diff"],
        );
        let mut checks = Vec::new();
        let mut record = |out: &mut CommandOutput, check: &str, n: usize, error: f64, threshold: f64| {
            let ok = error <= threshold;
            if !ok {
                out.failures.push(format!(
                    "{}: {check} at N={n}: error {error:.3e} exceeds {threshold:.3e}",
                    v.label
                ));
            }
            ids.push(vec![check.into(), n.into(), error.into(), threshold.into(), ok.into()]);
            checks.push(json!({ "check": check, "n": n, "error": error, "threshold": threshold, "pass": ok }));
        };
        for (si, &n) in cfg.sweep.iter().enumerate() {
            let threshold = tol * n as f64;
            let state = sample_network(&v.mlp.with_width(n), &vrng.substream(0).substream(si as u64))?;
            let h = fim_recursion(&state).pop().expect("depth >= 1");
            record(&mut out, "recursion_vs_delta_sum", n, h.sub(&delta_chain_sum(&state)).max_abs(), threshold);
            if n > ORACLE_MAX_WIDTH {
                continue;
            }
            let j = parameter_jacobian_oracle(&state)?;
            let dual = fim_dual(&state);
            let inv_n = 1.0 / n as f64;
            record(&mut out, "oracle_gram_vs_dual", n, j.matmul_t(&j).scale(inv_n).sub(&dual).max_abs(), threshold);
            let dim = big_l * n * n;
            if dim > DUAL_EIGEN_MAX_DIM {
                continue;
            }
            let mut cond = j.t_matmul(&j).scale(inv_n);
            cond.symmetrize_in_place();
            let mut big = symmetric_eigenvalues(&cond)?;
            big.reverse();
            let mut small = symmetric_eigenvalues(&dual)?;
            small.reverse();
            let mut top_err = 0.0f64;
            for (i, (a, b)) in big.iter().zip(&small).enumerate() {
                top_err = top_err.max((a - b).abs());
                eig_table.push(vec![n.into(), i.into(), (*a).into(), (*b).into(), (a - b).abs().into()]);
            }
            record(&mut out, "shared_nonzero_eigenvalues", n, top_err, threshold);
            let rest = big[n..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            record(&mut out, "remaining_eigenvalues_zero", n, rest, threshold);
            let m_big = MomentSeries::of_samples(&big, cfg.moment_order)?;
            let m_small = MomentSeries::of_samples(&small, cfg.moment_order)?;
            let scale = (big_l * n) as f64;
            for k in 1..=cfg.moment_order {
                let expect = m_small.moment(k) / scale;
                let rel = (m_big.moment(k) - expect).abs() / expect.abs().max(f64::MIN_POSITIVE);
                record(&mut out, &format!("moment_{k}_scaling"), n, rel, tol);
            }
        }
        let mut payload = Map::new();
        if !cfg.prediction_sweep.is_empty() {
            let outcome = freeness_moment_prediction_test(
                PredictionTarget::Fim,
                big_l,
                &v.mlp,
                &cfg.prediction_sweep,
                cfg.trials,
                cfg.moment_order,
                cfg.tolerances.relative,
                &ctx.rule,
                &vrng.substream(1),
                ctx.exec,
            )?;
            let mut table = detail_table(ctx.table_name("fim_moments", v));
            for r in &outcome.table {
                push_detail_row(&mut table, "fim", r);
            }
            out.absorb(&v.label, &outcome.report);
            payload.insert("prediction".into(), to_value(&outcome.report));
            out.tables.push(table);
        }
        payload.insert("identities".into(), Value::Array(checks));
        out.results.insert(v.label.clone(), Value::Object(payload));
        out.tables.push(ids);
        if !eig_table.rows.is_empty() {
            out.tables.push(eig_table);
        }
    }
    Ok(out)
}

/// Largest `‖A − B‖_F / ‖B‖_F`-style relative residual.
fn rel(num: f64, den: f64) -> f64 {
    num / den.max(f64::MIN_POSITIVE)
}

fn linalg_trial(n: usize, rng: &SeededRng) -> Result<Vec<(&'static str, f64, f64)>> {
    let mut r = rng.clone();
    let scale = 1.0 / (n as f64).sqrt();
    let a = sample_gaussian_matrix(&mut r, n, n, scale)?;
    let b = sample_gaussian_matrix(&mut r, n, n, scale)?;
    let c = sample_gaussian_matrix(&mut r, n, n, scale)?;
    let q = sample_haar_orthogonal(&mut r, n)?;
    let mut checks = vec![("haar_orthogonality", q.orthogonality_defect(), LINALG_TOLERANCE)];

    let mut sym = a.add(&a.transpose()).scale(0.5);
    sym.symmetrize_in_place();
    let eig = symmetric_eigen(&sym)?;
    let av = sym.matmul(&eig.eigenvectors);
    let vl = eig.eigenvectors.scale_cols(&eig.eigenvalues);
    checks.push(("eigen_residual", rel(av.sub(&vl).frobenius_norm(), sym.frobenius_norm()), LINALG_TOLERANCE));
    checks.push(("eigen_orthogonality", eig.eigenvectors.orthogonality_defect(), LINALG_TOLERANCE));

    let dec = svd(&a)?;
    let rebuilt = dec.u.scale_cols(&dec.s).matmul_t(&dec.v);
    checks.push(("svd_residual", rel(rebuilt.sub(&a).frobenius_norm(), a.frobenius_norm()), LINALG_TOLERANCE));
    checks.push((
        "svd_orthogonality",
        dec.u.orthogonality_defect().max(dec.v.orthogonality_defect()),
        LINALG_TOLERANCE,
    ));

    let abc = a.matmul(&b).matmul(&c).trace();
    let bca = b.matmul(&c).matmul(&a).trace();
    let cab = c.matmul(&a).matmul(&b).trace();
    let size = a.frobenius_norm() * b.frobenius_norm() * c.frobenius_norm();
    checks.push(("trace_cyclicity", rel((abc - bca).abs().max((abc - cab).abs()), size), LINALG_TOLERANCE));

    // ‖AB‖_r ≤ ‖A‖_p ‖B‖_q with 1/r = 1/p + 1/q, as a ratio that must stay ≤ 1.
    let sa = singular_values(&a)?;
    let sb = singular_values(&b)?;
    let sab = singular_values(&a.matmul(&b))?;
    let norm = |s: &[f64], p: Option<u32>| match p {
        Some(p) => schatten_from_singular_values(s, p, n),
        None => s.iter().copied().fold(0.0, f64::max),
    };
    let slack = 1.0 + 1e-12;
    for (name, r_exp, p, q2) in [
        ("holder_1_2_2", Some(1), Some(2), Some(2)),
        ("holder_2_4_4", Some(2), Some(4), Some(4)),
        ("holder_1_1_inf", Some(1), Some(1), None),
    ] {
        checks.push((name, rel(norm(&sab, r_exp), norm(&sa, p) * norm(&sb, q2)), slack));
    }
    Ok(checks)
}

fn verify_linalg(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let mut out = CommandOutput::default();
    let mut table = Table::new("checks", &["check", "n", "trial", "value", "threshold", "pass"]);
    let mut worst: Vec<Value> = Vec::new();
    for (si, &n) in cfg.sweep.iter().enumerate() {
        let srng = ctx.root.substream(si as u64);
        let per_trial = try_map_trials(cfg.trials, ctx.exec, |t| linalg_trial(n, &srng.substream(t as u64)))?;
        let names: Vec<&str> = per_trial[0].iter().map(|c| c.0).collect();
        for (ci, name) in names.iter().enumerate() {
            let mut max_value = 0.0f64;
            for (t, checks) in per_trial.iter().enumerate() {
                let (_, value, threshold) = checks[ci];
                let ok = value <= threshold;
                if !ok {
                    out.failures.push(format!("{name} at N={n}, trial {t}: {value:.3e} > {threshold:.3e}"));
                }
                max_value = max_value.max(value);
                table.push(vec![(*name).into(), n.into(), t.into(), value.into(), threshold.into(), ok.into()]);
            }
            worst.push(json!({ "check": name, "n": n, "max_value": max_value, "threshold": per_trial[0][ci].2 }));
        }
    }
    out.results.insert("checks".into(), Value::Array(worst));
    out.tables.push(table);
    Ok(out)
}

/// Coefficients `s₀ … s_{K−1}` of `(z + 1) / (γ (z + α))`, the S-transform
/// of `(1 − α) δ₀ + α δ_γ`.
pub fn bernoulli_s_coefficients(alpha: f64, gamma: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|n| {
            if n == 0 {
                1.0 / (gamma * alpha)
            } else {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 - alpha) / (gamma * alpha.powi(n as i32 + 1))
            }
        })
        .collect()
}

fn verify_s_transform(ctx: &Ctx) -> Result<CommandOutput> {
    let cfg = ctx.cfg;
    let k = cfg.moment_order;
    let mut out = CommandOutput::default();
    let mut checks = Table::new("checks", &["check", "case", "error", "threshold", "pass"]);
    let mut rows = Vec::new();
    let mut record = |out: &mut CommandOutput, check: &str, case: String, error: f64, threshold: f64| {
        let ok = error <= threshold;
        if !ok {
            out.failures.push(format!("{check} ({case}): error {error:.3e} exceeds {threshold:.3e}"));
        }
        checks.push(vec![check.into(), case.clone().into(), error.into(), threshold.into(), ok.into()]);
        rows.push(json!({ "check": check, "case": case, "error": error, "threshold": threshold, "pass": ok }));
    };

    let measures: [&[(f64, f64)]; 4] = [
        &[(0.0, 0.5), (1.0, 0.5)],
        &[(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)],
        &[(0.2, 0.25), (0.9, 0.25), (1.7, 0.25), (3.1, 0.25)],
        &[(0.05, 0.1), (0.6, 0.6), (1.4, 0.3)],
    ];
    for (i, atoms) in measures.iter().enumerate() {
        let m = MomentSeries::from_atoms(atoms, k)?;
        let back = moments_from_s(&s_transform(&m)?)?;
        let err = (1..=k)
            .map(|j| (back.moment(j) - m.moment(j)).abs() / m.moment(j).abs().max(1.0))
            .fold(0.0, f64::max);
        record(&mut out, "roundtrip", format!("measure{i}"), err, ROUNDTRIP_TOLERANCE);
    }

    for (alpha, gamma) in [(0.5, 1.0), (0.3, 2.0), (0.8, 0.5), (0.25, 1.0)] {
        let m = MomentSeries::from_atoms(&[(0.0, 1.0 - alpha), (gamma, alpha)], k)?;
        let s = s_transform(&m)?;
        let closed = bernoulli_s_coefficients(alpha, gamma, k);
        let err = s
            .coeffs()
            .iter()
            .zip(&closed)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        record(&mut out, "bernoulli_closed_form", format!("alpha={alpha},gamma={gamma}"), err, CLOSED_FORM_TOLERANCE);
    }

    let b = MomentSeries::from_atoms(&[(0.0, 0.5), (1.0, 0.5)], k.max(2))?;
    let bb = free_multiplicative_convolution(&b, &b)?;
    let hand = [0.25, 3.0 / 16.0];
    for (i, h) in hand.iter().enumerate() {
        record(&mut out, "bxb_hand_formula", format!("m{}", i + 1), (bb.moment(i + 1) - h).abs(), CLOSED_FORM_TOLERANCE);
    }

    // Two independent rank-N/2 projections: P = diag(I, 0) and Q = F Fᵀ for a
    // Haar frame F. The nonzero spectrum of PQP is that of GᵀG, where G is
    // the top half of F.
    let mut oracle = Table::new("oracle", &["n", "k", "empirical", "standard_error", "theory", "pass"]);
    let mut oracle_json = Vec::new();
    for (si, &n) in cfg.sweep.iter().enumerate() {
        if n % 2 != 0 {
            return Err(Error::Config(format!("sweep: projection oracle needs even N, got {n}")));
        }
        let half = n / 2;
        let srng = ctx.root.substream(si as u64);
        let per_trial = try_map_trials(cfg.trials, ctx.exec, |t| -> Result<[f64; 2]> {
            let f = sample_haar_frame(&mut srng.substream(t as u64), n, half)?;
            let g = f.submatrix(0, 0, half, half);
            let c = g.t_matmul(&g);
            let fro = c.frobenius_norm();
            Ok([c.trace() / n as f64, fro * fro / n as f64])
        })?;
        for (i, &theory) in hand.iter().enumerate() {
            let st: RunningStats = per_trial.iter().map(|v| v[i]).collect();
            let err = (st.mean() - theory).abs();
            let threshold = ORACLE_SE_MULTIPLE * st.standard_error();
            let ok = err <= threshold;
            if !ok {
                out.failures.push(format!(
                    "projection oracle m{} at N={n}: {:.6e} vs {theory} ({err:.3e} > {threshold:.3e})",
                    i + 1,
                    st.mean()
                ));
            }
            oracle.push(vec![
                n.into(),
                (i + 1).into(),
                st.mean().into(),
                st.standard_error().into(),
                theory.into(),
                ok.into(),
            ]);
            oracle_json.push(json!({
                "n": n, "k": i + 1, "empirical": st.mean(), "standard_error": st.standard_error(),
                "theory": theory, "pass": ok,
            }));
        }
    }
    out.results.insert("checks".into(), Value::Array(rows));
    out.results.insert("oracle".into(), Value::Array(oracle_json));
    out.results.insert("bxb_moments".into(), json!(moment_cells(&bb)));
    out.tables.extend([checks, oracle]);
    Ok(out)
}
