//! Experiment configuration: JSON parsing, per-command defaults, validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::freeness::{Word, FREENESS_TOLERANCE, KS_THRESHOLD};
use crate::mlp::{InputMode, MlpConfig};
use crate::par::Execution;
use crate::quadrature::GaussHermiteRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimulateSpectrum,
    TheoryProfile,
    PredictVsEmpirical,
    VerifyFreeness,
    VerifyInvariance,
    VerifyCutoff,
    GaussianPropagation,
    FimDuality,
    VerifyLinalg,
    VerifySTransform,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::SimulateSpectrum,
        Command::TheoryProfile,
        Command::PredictVsEmpirical,
        Command::VerifyFreeness,
        Command::VerifyInvariance,
        Command::VerifyCutoff,
        Command::GaussianPropagation,
        Command::FimDuality,
        Command::VerifyLinalg,
        Command::VerifySTransform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateSpectrum => "simulate-spectrum",
            Command::TheoryProfile => "theory-profile",
            Command::PredictVsEmpirical => "predict-vs-empirical",
            Command::VerifyFreeness => "verify-freeness",
            Command::VerifyInvariance => "verify-invariance",
            Command::VerifyCutoff => "verify-cutoff",
            Command::GaussianPropagation => "gaussian-propagation",
            Command::FimDuality => "fim-duality",
            Command::VerifyLinalg => "verify-linalg",
            Command::VerifySTransform => "verify-s-transform",
        }
    }

    fn default_depth(self) -> usize {
        match self {
            Command::GaussianPropagation => 4,
            _ => 3,
        }
    }

    fn default_sweep(self) -> Vec<usize> {
        match self {
            Command::SimulateSpectrum => vec![256],
            Command::TheoryProfile => vec![2],
            Command::PredictVsEmpirical => vec![256, 1024],
            Command::VerifyFreeness => vec![64, 128, 256, 512],
            Command::VerifyInvariance => vec![16],
            Command::VerifyCutoff => vec![16, 64, 256],
            Command::GaussianPropagation => vec![256, 4096],
            Command::FimDuality => vec![32, 64],
            Command::VerifyLinalg => vec![16, 64, 256],
            Command::VerifySTransform => vec![4096],
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Command::SimulateSpectrum => 4,
            Command::TheoryProfile => 1,
            Command::PredictVsEmpirical => 8,
            Command::VerifyFreeness => 20,
            Command::VerifyInvariance => 10_000,
            Command::VerifyCutoff => 100,
            Command::GaussianPropagation => 10,
            Command::FimDuality => 6,
            Command::VerifyLinalg => 3,
            Command::VerifySTransform => 8,
        }
    }

    fn default_moment_order(self) -> usize {
        match self {
            Command::TheoryProfile => crate::free_calculus::DEFAULT_ORDER,
            Command::VerifySTransform => 10,
            _ => 4,
        }
    }
}

/// Which matrix `simulate-spectrum` diagonalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumTarget {
    /// `J_ℓJ_ℓᵀ`.
    #[default]
    Jacobian,
    /// `H_ℓ`.
    Fim,
    /// `D_L H_L D_L`.
    FimDual,
    /// `(1/N) J_θᵀ J_θ` from the dense parameter-Jacobian oracle.
    ConditionalFim,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, depth: usize, field: &str) -> Result<Vec<T>> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); depth]),
            OneOrMany::Many(v) if v.len() == depth => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::Config(format!(
                "{field}: expected one value or {depth} values (one per layer), got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    label: Option<String>,
    depth: Option<usize>,
    activation: Option<OneOrMany<String>>,
    sigma_w: Option<OneOrMany<f64>>,
    sigma_w2: Option<OneOrMany<f64>>,
    input_radius: Option<f64>,
    input_mode: Option<InputMode>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    depth: Option<usize>,
    activation: Option<OneOrMany<String>>,
    sigma_w: Option<OneOrMany<f64>>,
    sigma_w2: Option<OneOrMany<f64>>,
    input_radius: Option<f64>,
    input_mode: Option<InputMode>,
    variants: Option<Vec<RawVariant>>,
    sweep: Option<Vec<usize>>,
    trials: Option<usize>,
    seed: Option<u64>,
    moment_order: Option<usize>,
    output_dir: Option<PathBuf>,
    tolerances: Option<BTreeMap<String, f64>>,
    layer: Option<usize>,
    target: Option<SpectrumTarget>,
    bins: Option<usize>,
    words: Option<Vec<String>>,
    control_words: Option<Vec<String>>,
    factors: Option<Vec<usize>>,
    schatten_p: Option<Vec<u32>>,
    prediction_sweep: Option<Vec<usize>>,
    quadrature_order: Option<usize>,
    execution: Option<Execution>,
}

/// One network configuration an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variant {
    pub label: String,
    pub mlp: MlpConfig,
}

/// Pass/fail thresholds; each can be overridden under `"tolerances"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest-N bound on mean |tr(word)|.
    pub freeness: f64,
    /// Relative moment tolerance (the 3 SE alternative always applies).
    pub relative: f64,
    /// KS distance bound at the largest width.
    pub ks: f64,
    /// Matrix identities hold to `identity · N`.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            freeness: FREENESS_TOLERANCE,
            relative: crate::freeness::RELATIVE_TOLERANCE,
            ks: KS_THRESHOLD,
            identity: 1e-9,
        }
    }
}

pub const DEFAULT_WORDS: [&str; 5] = [
    "W1W1t D1^2",
    "W1 D1^2",
    "W1 D1^2 W1t D1^2",
    "WJJW2 D2^2 WJJW2 D2^2",
    "H2 D2^2 H2 D2^2",
];
pub const DEFAULT_CONTROL_WORDS: [&str; 1] = ["D1^2 D1^4"];

/// Validated experiment description. `output_dir` is not part of the echo
/// written to reports, so moving the output does not change the payload.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub variants: Vec<Variant>,
    pub sweep: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub moment_order: usize,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
    pub layer: Option<usize>,
    pub target: SpectrumTarget,
    pub bins: usize,
    pub words: Vec<String>,
    pub control_words: Vec<String>,
    pub factors: Vec<usize>,
    pub schatten_p: Vec<u32>,
    pub prediction_sweep: Vec<usize>,
    pub quadrature_order: usize,
    pub execution: Execution,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_activations(spec: &OneOrMany<String>, depth: usize, field: &str) -> Result<Vec<Activation>> {
    spec.expand(depth, field)?
        .iter()
        .map(|s| s.parse::<Activation>().map_err(|e| cfg_err(format!("{field}: {e}"))))
        .collect()
}

fn resolve_sigma(
    sigma_w: Option<&OneOrMany<f64>>,
    sigma_w2: Option<&OneOrMany<f64>>,
    depth: usize,
    prefix: &str,
) -> Result<Option<Vec<f64>>> {
    match (sigma_w, sigma_w2) {
        (Some(_), Some(_)) => Err(cfg_err(format!("{prefix}give either sigma_w or sigma_w2, not both"))),
        (Some(s), None) => {
            let v = s.expand(depth, &format!("{prefix}sigma_w"))?;
            for (i, x) in v.iter().enumerate() {
                if !(x.is_finite() && *x > 0.0) {
                    return Err(cfg_err(format!("{prefix}sigma_w[{}] must be positive, got {x}", i + 1)));
                }
            }
            Ok(Some(v))
        }
        (None, Some(s2)) => {
            let v = s2.expand(depth, &format!("{prefix}sigma_w2"))?;
            for (i, x) in v.iter().enumerate() {
                if !(x.is_finite() && *x > 0.0) {
                    return Err(cfg_err(format!("{prefix}sigma_w2[{}] must be positive, got {x}", i + 1)));
                }
            }
            Ok(Some(v.iter().map(|x| x.sqrt()).collect()))
        }
        (None, None) => Ok(None),
    }
}

fn check_sweep(sweep: &[usize], field: &str, allow_empty: bool) -> Result<()> {
    if sweep.is_empty() && !allow_empty {
        return Err(cfg_err(format!("{field} must not be empty")));
    }
    if let Some(&n) = sweep.iter().find(|&&n| n < 2) {
        return Err(cfg_err(format!("{field}: widths must be at least 2, got {n}")));
    }
    if sweep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(cfg_err(format!("{field} must be strictly ascending")));
    }
    Ok(())
}

fn sanitize_label(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| cfg_err(format!("cannot parse config: {e}")))?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let command = raw.command;
        let sweep = raw.sweep.clone().unwrap_or_else(|| command.default_sweep());
        check_sweep(&sweep, "sweep", false)?;
        let width = *sweep.last().expect("nonempty sweep");

        let base_depth = raw.depth.unwrap_or_else(|| command.default_depth());
        if base_depth == 0 {
            return Err(cfg_err("depth must be at least 1"));
        }
        let build = |prefix: &str,
                     depth: usize,
                     activation: Option<&OneOrMany<String>>,
                     sigma_w: Option<&OneOrMany<f64>>,
                     sigma_w2: Option<&OneOrMany<f64>>,
                     input_radius: Option<f64>,
                     input_mode: Option<InputMode>|
         -> Result<MlpConfig> {
            let activations = match activation.or(raw.activation.as_ref()) {
                Some(a) => parse_activations(a, depth, &format!("{prefix}activation"))?,
                None => vec![Activation::Relu; depth],
            };
            let sigma = match resolve_sigma(sigma_w, sigma_w2, depth, prefix)? {
                Some(s) => s,
                None => resolve_sigma(raw.sigma_w.as_ref(), raw.sigma_w2.as_ref(), depth, "")?
                    .unwrap_or_else(|| vec![std::f64::consts::SQRT_2; depth]),
            };
            let mlp = MlpConfig {
                depth,
                width,
                sigma_w: sigma,
                activations,
                input_radius: input_radius.or(raw.input_radius).unwrap_or(1.0),
                input_mode: input_mode.or(raw.input_mode).unwrap_or_default(),
            };
            mlp.validate().map_err(|e| cfg_err(format!("{prefix}{e}")))?;
            Ok(mlp)
        };

        let variants = match &raw.variants {
            None => {
                let mlp = build("", base_depth, None, None, None, None, None)?;
                vec![Variant { label: default_label(&mlp), mlp }]
            }
            Some(list) if list.is_empty() => return Err(cfg_err("variants must not be empty")),
            Some(list) => {
                let mut out: Vec<Variant> = Vec::new();
                for (i, v) in list.iter().enumerate() {
                    let prefix = format!("variants[{i}].");
                    let depth = v.depth.unwrap_or(base_depth);
                    if depth == 0 {
                        return Err(cfg_err(format!("{prefix}depth must be at least 1")));
                    }
                    let mlp = build(
                        &prefix,
                        depth,
                        v.activation.as_ref(),
                        v.sigma_w.as_ref(),
                        v.sigma_w2.as_ref(),
                        v.input_radius,
                        v.input_mode,
                    )?;
                    let label = sanitize_label(&v.label.clone().unwrap_or_else(|| default_label(&mlp)));
                    if label.is_empty() {
                        return Err(cfg_err(format!("{prefix}label is empty after sanitizing")));
                    }
                    if out.iter().any(|o| o.label == label) {
                        return Err(cfg_err(format!("{prefix}label {label:?} is not unique")));
                    }
                    out.push(Variant { label, mlp });
                }
                out
            }
        };

        let trials = raw.trials.unwrap_or_else(|| command.default_trials());
        let min_trials = if command == Command::VerifyInvariance { 2 } else { 1 };
        if trials < min_trials {
            return Err(cfg_err(format!("trials must be at least {min_trials}, got {trials}")));
        }
        let moment_order = raw.moment_order.unwrap_or_else(|| command.default_moment_order());
        if moment_order == 0 {
            return Err(cfg_err("moment_order must be at least 1"));
        }
        let max_order = match command {
            Command::PredictVsEmpirical | Command::FimDuality => crate::freeness::MAX_PREDICTION_ORDER,
            _ => 64,
        };
        if moment_order > max_order {
            return Err(cfg_err(format!("moment_order must be at most {max_order} for {}", command.name())));
        }

        let mut tolerances = Tolerances::default();
        for (key, &value) in raw.tolerances.iter().flatten() {
            if !(value.is_finite() && value > 0.0) {
                return Err(cfg_err(format!("tolerances.{key} must be positive, got {value}")));
            }
            match key.as_str() {
                "freeness" => tolerances.freeness = value,
                "relative" => tolerances.relative = value,
                "ks" => tolerances.ks = value,
                "identity" => tolerances.identity = value,
                _ => {
                    return Err(cfg_err(format!(
                        "tolerances.{key} is not a known tolerance (freeness, relative, ks, identity)"
                    )))
                }
            }
        }

        let min_depth = variants.iter().map(|v| v.mlp.depth).min().unwrap_or(1);
        if let Some(layer) = raw.layer {
            if layer == 0 || layer > min_depth {
                return Err(cfg_err(format!("layer must be in 1..={min_depth}, got {layer}")));
            }
        }
        let bins = raw.bins.unwrap_or(40);
        if bins == 0 {
            return Err(cfg_err("bins must be at least 1"));
        }

        let words = raw.words.unwrap_or_else(|| DEFAULT_WORDS.iter().map(|s| s.to_string()).collect());
        let control_words = raw
            .control_words
            .unwrap_or_else(|| DEFAULT_CONTROL_WORDS.iter().map(|s| s.to_string()).collect());
        if command == Command::VerifyFreeness {
            if words.is_empty() {
                return Err(cfg_err("words must not be empty"));
            }
            for w in &words {
                let parsed = Word::parse(w).map_err(|e| cfg_err(format!("words: {e}")))?;
                if parsed.max_layer() > min_depth {
                    return Err(cfg_err(format!("words: {w:?} needs depth {}", parsed.max_layer())));
                }
            }
            for w in &control_words {
                let parsed = Word::parse_unchecked(w).map_err(|e| cfg_err(format!("control_words: {e}")))?;
                if parsed.max_layer() > min_depth {
                    return Err(cfg_err(format!("control_words: {w:?} needs depth {}", parsed.max_layer())));
                }
            }
        }

        let factors = raw.factors.unwrap_or_else(|| vec![1, 2, 3, 4]);
        if factors.is_empty() || factors.contains(&0) {
            return Err(cfg_err("factors must be a nonempty list of positive counts"));
        }
        let schatten_p = raw.schatten_p.unwrap_or_else(|| vec![1, 2, 4]);
        if schatten_p.is_empty() || schatten_p.contains(&0) {
            return Err(cfg_err("schatten_p must be a nonempty list of exponents >= 1"));
        }
        let prediction_sweep = raw.prediction_sweep.unwrap_or_else(|| vec![512]);
        check_sweep(&prediction_sweep, "prediction_sweep", true)?;
        let quadrature_order = raw.quadrature_order.unwrap_or(GaussHermiteRule::DEFAULT_ORDER);
        if quadrature_order < 2 {
            return Err(cfg_err("quadrature_order must be at least 2"));
        }

        Ok(ExperimentConfig {
            command,
            variants,
            sweep,
            trials,
            seed: raw.seed.unwrap_or(0),
            moment_order,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            tolerances,
            layer: raw.layer,
            target: raw.target.unwrap_or_default(),
            bins,
            words,
            control_words,
            factors,
            schatten_p,
            prediction_sweep,
            quadrature_order,
            execution: raw.execution.unwrap_or_default(),
        })
    }
}

fn default_label(mlp: &MlpConfig) -> String {
    let first = mlp.activations[0];
    let name = if mlp.activations.iter().all(|&a| a == first) {
        first.to_string()
    } else {
        "mixed".to_string()
    };
    sanitize_label(&name)
}
