//! Alternating centered words: `tr(å₁ å₂ ⋯ åₙ)` with `å = a − tr(a)·I` and
//! adjacent letters taken from different families. For asymptotically free
//! families the statistic vanishes as `N → ∞`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{FreenessReport, ReportRow};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{fim_recursion, input_jacobian_chain, sample_network, MlpConfig, NetworkState};
use crate::par::{try_map_trials, Execution, RunningStats};
use crate::rng::SeededRng;

/// Largest-N threshold for `mean |tr(word)|`.
pub const FREENESS_TOLERANCE: f64 = 0.02;
/// Dependent control words must stay above this at every N.
pub const CONTROL_FLOOR: f64 = 0.1;
/// Monotonicity slack in combined standard errors.
const MONOTONE_SE: f64 = 2.0;
/// Statistics below this count as zero when checking monotonicity.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    /// `W_ℓ` (`W1`) or `W_ℓᵀ` (`W1t`).
    W { layer: usize, transpose: bool },
    /// `W_ℓ W_ℓᵀ` (`W1W1t`).
    WWt { layer: usize },
    /// `D_ℓ^k` (`D1^2`); all `D` letters form one family.
    D { layer: usize, power: u32 },
    /// `W_ℓ J_{ℓ−1} J_{ℓ−1}ᵀ W_ℓᵀ` (`WJJW2`), with `J₀ = I`.
    Wjjw { layer: usize },
    /// `J_ℓ J_ℓᵀ` (`JJ2`).
    Jj { layer: usize },
    /// `H_ℓ` of the FIM recursion (`H2`).
    H { layer: usize },
}

impl Letter {
    pub fn layer(self) -> usize {
        match self {
            Letter::W { layer, .. }
            | Letter::WWt { layer }
            | Letter::D { layer, .. }
            | Letter::Wjjw { layer }
            | Letter::Jj { layer }
            | Letter::H { layer } => layer,
        }
    }

    /// Family identifier; adjacent letters of a word must differ in it.
    pub fn family(self) -> String {
        match self {
            Letter::W { layer, .. } | Letter::WWt { layer } => format!("W{layer}"),
            Letter::D { .. } => "D".to_string(),
            Letter::Wjjw { layer } => format!("WJJW{layer}"),
            Letter::Jj { layer } => format!("JJ{layer}"),
            Letter::H { layer } => format!("H{layer}"),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Letter::W { layer, transpose: false } => write!(f, "W{layer}"),
            Letter::W { layer, transpose: true } => write!(f, "W{layer}t"),
            Letter::WWt { layer } => write!(f, "W{layer}W{layer}t"),
            Letter::D { layer, power } => write!(f, "D{layer}^{power}"),
            Letter::Wjjw { layer } => write!(f, "WJJW{layer}"),
            Letter::Jj { layer } => write!(f, "JJ{layer}"),
            Letter::H { layer } => write!(f, "H{layer}"),
        }
    }
}

fn parse_layer(s: &str, token: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(l) if l >= 1 => Ok(l),
        _ => Err(Error::MalformedWord(format!("bad layer in letter {token:?}"))),
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        if let Some(rest) = token.strip_prefix("WJJW") {
            return Ok(Letter::Wjjw { layer: parse_layer(rest, token)? });
        }
        if let Some(rest) = token.strip_prefix("JJ") {
            return Ok(Letter::Jj { layer: parse_layer(rest, token)? });
        }
        if let Some(rest) = token.strip_prefix('H') {
            return Ok(Letter::H { layer: parse_layer(rest, token)? });
        }
        if let Some(rest) = token.strip_prefix('D') {
            let (l, p) = rest.split_once('^').unwrap_or((rest, "1"));
            let power = match p.parse::<u32>() {
                Ok(p) if p >= 1 => p,
                _ => return Err(Error::MalformedWord(format!("bad power in letter {token:?}"))),
            };
            return Ok(Letter::D { layer: parse_layer(l, token)?, power });
        }
        if let Some(rest) = token.strip_prefix('W') {
            if let Some(t) = rest.strip_suffix('t') {
                if let Some((a, b)) = t.split_once('W') {
                    let (la, lb) = (parse_layer(a, token)?, parse_layer(b, token)?);
                    if la != lb {
                        return Err(Error::MalformedWord(format!("{token:?} mixes layers")));
                    }
                    return Ok(Letter::WWt { layer: la });
                }
                return Ok(Letter::W { layer: parse_layer(t, token)?, transpose: true });
            }
            return Ok(Letter::W { layer: parse_layer(rest, token)?, transpose: false });
        }
        Err(Error::MalformedWord(format!("unknown letter {token:?}")))
    }
}

/// A product of letters, written space-separated (`"W1 D1^2 W1t D1^2"`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    letters: Vec<Letter>,
    /// Family alternation is not enforced (used for dependent controls).
    unchecked: bool,
}

impl Word {
    /// Parses and checks that adjacent letters come from different families.
    pub fn parse(s: &str) -> Result<Word> {
        let w = Self::parse_unchecked(s)?;
        for pair in w.letters.windows(2) {
            if pair[0].family() == pair[1].family() {
                return Err(Error::MalformedWord(format!(
                    "adjacent letters {} and {} share family {}",
                    pair[0],
                    pair[1],
                    pair[0].family()
                )));
            }
        }
        Ok(Word { unchecked: false, ..w })
    }

    /// Parses without the alternation check.
    pub fn parse_unchecked(s: &str) -> Result<Word> {
        let letters = s.split_whitespace().map(str::parse).collect::<Result<Vec<Letter>>>()?;
        if letters.is_empty() {
            return Err(Error::MalformedWord("empty word".into()));
        }
        Ok(Word { letters, unchecked: true })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn max_layer(&self) -> usize {
        self.letters.iter().map(|l| l.layer()).max().unwrap_or(0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

enum Value {
    Dense(Matrix),
    Diag(Vec<f64>),
}

/// Centered letter values of one sampled network, computed on demand.
struct LetterCache<'a> {
    state: &'a NetworkState,
    values: HashMap<Letter, Value>,
    hs: Option<Vec<Matrix>>,
}

fn centered_dense(m: Matrix) -> Value {
    let t = m.normalized_trace();
    Value::Dense(m.add_identity(-t))
}

impl<'a> LetterCache<'a> {
    fn new(state: &'a NetworkState) -> Self {
        LetterCache { state, values: HashMap::new(), hs: None }
    }

    fn get(&mut self, letter: Letter) -> Result<&Value> {
        if !self.values.contains_key(&letter) {
            let v = self.compute(letter)?;
            self.values.insert(letter, v);
        }
        Ok(&self.values[&letter])
    }

    fn compute(&mut self, letter: Letter) -> Result<Value> {
        let s = self.state;
        Ok(match letter {
            Letter::W { layer, transpose } => {
                let w = s.weight(layer);
                centered_dense(if transpose { w.transpose() } else { w.clone() })
            }
            Letter::WWt { layer } => centered_dense(s.weight(layer).gram()),
            Letter::D { layer, power } => {
                let d: Vec<f64> = s.jac_diag(layer).iter().map(|v| v.powi(power as i32)).collect();
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                Value::Diag(d.into_iter().map(|v| v - mean).collect())
            }
            Letter::Wjjw { layer } => {
                let w = s.weight(layer);
                let m = if layer == 1 {
                    w.gram()
                } else {
                    let j = input_jacobian_chain(s, layer - 1)?;
                    w.matmul(&j).gram()
                };
                centered_dense(m)
            }
            Letter::Jj { layer } => centered_dense(input_jacobian_chain(s, layer)?.gram()),
            Letter::H { layer } => {
                let hs = self.hs.get_or_insert_with(|| fim_recursion(s));
                centered_dense(hs[layer - 1].clone())
            }
        })
    }
}

/// `tr(å₁ ⋯ åₙ)` for one sampled network.
fn word_trace(word: &Word, cache: &mut LetterCache<'_>) -> Result<f64> {
    let letters = word.letters();
    let n = cache.state.width();
    if letters.len() == 1 {
        return Ok(match cache.get(letters[0])? {
            Value::Dense(m) => m.normalized_trace(),
            Value::Diag(d) => d.iter().sum::<f64>() / n as f64,
        });
    }
    let mut acc = match cache.get(letters[0])? {
        Value::Dense(m) => m.clone(),
        Value::Diag(d) => Matrix::from_diag(d),
    };
    for &l in &letters[1..letters.len() - 1] {
        acc = match cache.get(l)? {
            Value::Dense(m) => acc.matmul(m),
            Value::Diag(d) => acc.scale_cols(d),
        };
    }
    // tr(A·B) without forming the last product.
    let total = match cache.get(letters[letters.len() - 1])? {
        Value::Dense(b) => {
            let mut t = 0.0;
            for i in 0..n {
                let row = acc.row(i);
                for (j, &a) in row.iter().enumerate() {
                    t += a * b.get(j, i);
                }
            }
            t
        }
        Value::Diag(d) => (0..n).map(|i| acc.get(i, i) * d[i]).sum(),
    };
    Ok(total / n as f64)
}

/// Mean `|tr(word)|` over trials at each width of `sweep`. Each word must
/// decay monotonically across the sweep (within 2 combined SE) and end below
/// `tolerance`; each control word must stay above [`CONTROL_FLOOR`] at every
/// width.
#[allow(clippy::too_many_arguments)]
pub fn alternating_freeness_test(
    words: &[Word],
    controls: &[Word],
    cfg: &MlpConfig,
    sweep: &[usize],
    trials: usize,
    tolerance: f64,
    rng: &SeededRng,
    exec: Execution,
) -> Result<FreenessReport> {
    cfg.validate()?;
    if sweep.is_empty() || trials == 0 {
        return Err(Error::InvalidArgument("freeness test needs a width sweep and trials".into()));
    }
    for w in words.iter().chain(controls) {
        if w.max_layer() > cfg.depth {
            return Err(Error::MalformedWord(format!("{w} refers to a layer beyond depth {}", cfg.depth)));
        }
    }
    let all: Vec<&Word> = words.iter().chain(controls).collect();
    let mut labels: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    labels.extend(controls.iter().map(|w| format!("control: {w}")));

    let mut report = FreenessReport::new("alternating_freeness", sweep.to_vec(), labels.clone(), trials);
    // stats[word][sweep index]
    let mut stats: Vec<Vec<RunningStats>> = vec![Vec::new(); all.len()];
    for (si, &n) in sweep.iter().enumerate() {
        let cfg_n = cfg.with_width(n);
        cfg_n.validate()?;
        let srng = rng.substream(si as u64);
        let per_trial = try_map_trials(trials, exec, |t| -> Result<Vec<f64>> {
            let state = sample_network(&cfg_n, &srng.substream(t as u64))?;
            let mut cache = LetterCache::new(&state);
            all.iter().map(|w| Ok(word_trace(w, &mut cache)?.abs())).collect()
        })?;
        for (wi, s) in stats.iter_mut().enumerate() {
            s.push(per_trial.iter().map(|v| v[wi]).collect());
        }
    }

    let last = sweep.len() - 1;
    for (wi, label) in labels.iter().enumerate() {
        let is_control = wi >= words.len();
        for (si, &n) in sweep.iter().enumerate() {
            let st = &stats[wi][si];
            let (ok, threshold) = if is_control {
                (st.mean() > CONTROL_FLOOR, CONTROL_FLOOR)
            } else if si == last {
                (st.mean() < tolerance, tolerance)
            } else {
                let next = &stats[wi][si + 1];
                let slack = MONOTONE_SE * (st.standard_error().powi(2) + next.standard_error().powi(2)).sqrt();
                let limit = st.mean() + slack + NOISE_FLOOR;
                (next.mean() <= limit, limit)
            };
            if !ok {
                report.fail(if is_control {
                    format!("{label}: statistic {:.4} at N={n} not above {CONTROL_FLOOR}", st.mean())
                } else if si == last {
                    format!("{label}: statistic {:.4e} at N={n} not below {tolerance}", st.mean())
                } else {
                    format!("{label}: statistic increases from N={n} to N={}", sweep[si + 1])
                });
            }
            report.push(ReportRow::new(label.clone(), n, st.mean(), st.standard_error(), threshold, ok));
        }
    }
    Ok(report)
}
