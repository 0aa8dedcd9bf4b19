//! Haar-orthogonal MLP: sampling, forward pass, Jacobian chains and the
//! conditional-FIM recursion.
//!
//! Layers are 1-based as in the usual notation: `W_ℓ`, `h^ℓ`, `D_ℓ` exist for
//! `ℓ = 1..=L`, and `x^ℓ`, `q̂_ℓ` for `ℓ = 0..=L`. Biases are always zero.

use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::quadrature::GaussHermiteRule;
use crate::rng::{sample_haar_orthogonal, sample_haar_reflectors, SeededRng};

/// Largest width the dense parameter-Jacobian oracle accepts.
pub const ORACLE_MAX_WIDTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Uniform direction on the sphere, scaled to norm `r√N`.
    #[default]
    UnitSphereScaled,
    /// The constant vector `r·(1, …, 1)`.
    FixedVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub depth: usize,
    pub width: usize,
    /// `σ_{w,ℓ}` for `ℓ = 1..=L`.
    pub sigma_w: Vec<f64>,
    /// `φ^ℓ` for `ℓ = 1..=L`.
    pub activations: Vec<Activation>,
    pub input_radius: f64,
    #[serde(default)]
    pub input_mode: InputMode,
}

impl MlpConfig {
    /// Same `σ_w` and activation in every layer, unit input radius.
    pub fn uniform(depth: usize, width: usize, sigma_w: f64, activation: Activation) -> Self {
        MlpConfig {
            depth,
            width,
            sigma_w: vec![sigma_w; depth],
            activations: vec![activation; depth],
            input_radius: 1.0,
            input_mode: InputMode::UnitSphereScaled,
        }
    }

    pub fn with_width(&self, width: usize) -> Self {
        MlpConfig { width, ..self.clone() }
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth {
            return invalid(format!("cannot truncate depth {} to {depth}", self.depth));
        }
        Ok(MlpConfig {
            depth,
            sigma_w: self.sigma_w[..depth].to_vec(),
            activations: self.activations[..depth].to_vec(),
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return invalid("depth must be at least 1");
        }
        if self.width < 2 {
            return invalid(format!("width must be at least 2, got {}", self.width));
        }
        if self.sigma_w.len() != self.depth {
            return invalid(format!("sigma_w has {} entries for depth {}", self.sigma_w.len(), self.depth));
        }
        if self.activations.len() != self.depth {
            return invalid(format!(
                "activations has {} entries for depth {}",
                self.activations.len(),
                self.depth
            ));
        }
        if let Some(l) = self.sigma_w.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return invalid(format!("sigma_w[{}] must be positive, got {}", l + 1, self.sigma_w[l]));
        }
        if !(self.input_radius.is_finite() && self.input_radius > 0.0) {
            return invalid(format!("input_radius must be positive, got {}", self.input_radius));
        }
        Ok(())
    }

    /// `σ²_{w,ℓ}`, 1-based.
    pub fn sigma2(&self, layer: usize) -> f64 {
        let s = self.sigma_w[layer - 1];
        s * s
    }

    /// `φ^ℓ`, 1-based.
    pub fn activation(&self, layer: usize) -> Activation {
        self.activations[layer - 1]
    }
}

/// One sampled network and its forward pass at one input.
#[derive(Debug, Clone)]
pub struct NetworkState {
    weights: Vec<Matrix>,
    h: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    qhat: Vec<f64>,
}

fn squared_norm_per_unit(v: &[f64]) -> f64 {
    let n = norm2(v);
    n * n / v.len() as f64
}

/// `x⁰` for the configured input mode, drawn from `rng` when random.
pub fn sample_input(cfg: &MlpConfig, rng: &mut SeededRng) -> Vec<f64> {
    let n = cfg.width;
    let r = cfg.input_radius;
    match cfg.input_mode {
        InputMode::UnitSphereScaled => {
            let scale = r * (n as f64).sqrt();
            rng.unit_sphere(n).into_iter().map(|u| u * scale).collect()
        }
        InputMode::FixedVector => vec![r; n],
    }
}

impl NetworkState {
    /// Forward pass through the given weights.
    pub fn forward(cfg: &MlpConfig, weights: Vec<Matrix>, x0: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.width;
        if weights.len() != cfg.depth || weights.iter().any(|w| w.shape() != (n, n)) {
            return invalid("weights do not match the configuration");
        }
        if x0.len() != n {
            return invalid(format!("input has length {}, expected {n}", x0.len()));
        }
        let mut h = Vec::with_capacity(cfg.depth);
        let mut x = Vec::with_capacity(cfg.depth + 1);
        let mut d = Vec::with_capacity(cfg.depth);
        let mut qhat = Vec::with_capacity(cfg.depth + 1);
        qhat.push(squared_norm_per_unit(&x0));
        x.push(x0);
        for (l, w) in weights.iter().enumerate() {
            let phi = cfg.activations[l];
            let hl = w.matvec(&x[l]);
            let xl: Vec<f64> = hl.iter().map(|&v| phi.eval(v)).collect();
            d.push(hl.iter().map(|&v| phi.deriv(v)).collect());
            qhat.push(squared_norm_per_unit(&xl));
            h.push(hl);
            x.push(xl);
        }
        Ok(NetworkState { weights, h, x, d, qhat })
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn width(&self) -> usize {
        self.x[0].len()
    }

    /// `W_ℓ`, `1 ≤ ℓ ≤ L`.
    pub fn weight(&self, layer: usize) -> &Matrix {
        &self.weights[layer - 1]
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// `h^ℓ`, `1 ≤ ℓ ≤ L`.
    pub fn pre(&self, layer: usize) -> &[f64] {
        &self.h[layer - 1]
    }

    /// `x^ℓ`, `0 ≤ ℓ ≤ L`.
    pub fn post(&self, layer: usize) -> &[f64] {
        &self.x[layer]
    }

    /// Diagonal of `D_ℓ`, `1 ≤ ℓ ≤ L`.
    pub fn jac_diag(&self, layer: usize) -> &[f64] {
        &self.d[layer - 1]
    }

    /// `q̂_ℓ = ‖x^ℓ‖²/N`, `0 ≤ ℓ ≤ L`.
    pub fn qhat(&self, layer: usize) -> f64 {
        self.qhat[layer]
    }

    pub fn qhats(&self) -> &[f64] {
        &self.qhat
    }
}

/// Samples `x⁰` from substream 0 and `W_ℓ = σ_{w,ℓ}·O_ℓ` with `O_ℓ` Haar
/// from substream `ℓ`, then runs the forward pass.
pub fn sample_network(cfg: &MlpConfig, rng: &SeededRng) -> Result<NetworkState> {
    cfg.validate()?;
    let x0 = sample_input(cfg, &mut rng.substream(0));
    let weights = (1..=cfg.depth)
        .map(|l| {
            let o = sample_haar_orthogonal(&mut rng.substream(l as u64), cfg.width)?;
            Ok(o.scale(cfg.sigma_w[l - 1]))
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkState::forward(cfg, weights, x0)
}

/// Preactivations `h¹ … h^L` only, with each Haar factor kept as Householder
/// reflectors so a forward pass costs O(L·N²) instead of O(L·N³). Same law as
/// [`sample_network`], different draws.
pub fn propagate_hidden(cfg: &MlpConfig, rng: &SeededRng) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let mut x = sample_input(cfg, &mut rng.substream(0));
    let mut out = Vec::with_capacity(cfg.depth);
    for l in 1..=cfg.depth {
        let o = sample_haar_reflectors(&mut rng.substream(l as u64), cfg.width)?;
        o.apply(&mut x);
        let s = cfg.sigma_w[l - 1];
        x.iter_mut().for_each(|v| *v *= s);
        let phi = cfg.activations[l - 1];
        let next = x.iter().map(|&v| phi.eval(v)).collect();
        out.push(std::mem::replace(&mut x, next));
    }
    Ok(out)
}

/// Limits of the forward pass: `q_ℓ = σ²_{w,ℓ} r²_{ℓ−1}` and
/// `r²_ℓ = E_{h∼N(0,q_ℓ)}[φ_ℓ(h)²]`, with `r₀ = r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryProfile {
    /// `q₁ … q_L`.
    pub q: Vec<f64>,
    /// `r₀ … r_L`.
    pub r: Vec<f64>,
}

impl TheoryProfile {
    /// `q_ℓ`, `1 ≤ ℓ ≤ L`.
    pub fn q(&self, layer: usize) -> f64 {
        self.q[layer - 1]
    }

    /// `r_ℓ`, `0 ≤ ℓ ≤ L`.
    pub fn r(&self, layer: usize) -> f64 {
        self.r[layer]
    }

    /// `r_ℓ²`, the limit of `q̂_ℓ`.
    pub fn r2(&self, layer: usize) -> f64 {
        self.r[layer] * self.r[layer]
    }
}

pub fn theory_profile(cfg: &MlpConfig, rule: &GaussHermiteRule) -> Result<TheoryProfile> {
    cfg.validate()?;
    let mut r = vec![cfg.input_radius];
    let mut q = Vec::with_capacity(cfg.depth);
    for l in 1..=cfg.depth {
        let ql = cfg.sigma2(l) * r[l - 1] * r[l - 1];
        let r2 = cfg.activation(l).second_moment(ql, rule)?;
        if !(r2.is_finite() && r2 > 0.0) {
            return Err(Error::UndefinedTransform {
                first_moment: r2,
                context: format!("layer {l} has vanishing signal variance"),
            });
        }
        q.push(ql);
        r.push(r2.sqrt());
    }
    Ok(TheoryProfile { q, r })
}

/// `J_ℓ = D_ℓ W_ℓ ⋯ D₁ W₁`, built by successive left multiplications with the
/// diagonal applied as a row scaling.
pub fn input_jacobian_chain(state: &NetworkState, layer: usize) -> Result<Matrix> {
    check_layer(state, layer)?;
    let mut j = state.weight(1).scale_rows(state.jac_diag(1));
    for l in 2..=layer {
        j = state.weight(l).matmul(&j).scale_rows(state.jac_diag(l));
    }
    Ok(j)
}

/// `J_ℓ J_ℓᵀ`.
pub fn jacobian_gram(state: &NetworkState, layer: usize) -> Result<Matrix> {
    Ok(input_jacobian_chain(state, layer)?.gram())
}

fn check_layer(state: &NetworkState, layer: usize) -> Result<()> {
    if layer == 0 || layer > state.depth() {
        return invalid(format!("layer {layer} outside 1..={}", state.depth()));
    }
    Ok(())
}

/// `W M Wᵀ`, symmetrized.
fn conjugate(w: &Matrix, m: &Matrix) -> Matrix {
    let mut out = w.matmul(m).matmul_t(w);
    out.symmetrize_in_place();
    out
}

/// `H₁ … H_L` with `H₁ = q̂₀ I` and
/// `H_{ℓ+1} = q̂_ℓ I + W_{ℓ+1} D_ℓ H_ℓ D_ℓ W_{ℓ+1}ᵀ`.
pub fn fim_recursion(state: &NetworkState) -> Vec<Matrix> {
    let n = state.width();
    let mut hs = Vec::with_capacity(state.depth());
    hs.push(Matrix::identity(n).scale(state.qhat(0)));
    for l in 1..state.depth() {
        let d = state.jac_diag(l);
        let inner = hs[l - 1].scale_rows(d).scale_cols(d);
        hs.push(conjugate(state.weight(l + 1), &inner).add_identity(state.qhat(l)));
    }
    hs
}

/// `δ_{L→ℓ} = ∂h^L/∂h^ℓ` for `ℓ = 1..=L` (index `ℓ − 1`), via
/// `δ_{L→L} = I` and `δ_{k+1→ℓ} = W_{k+1} D_k δ_{k→ℓ}`.
pub fn delta_chains(state: &NetworkState) -> Vec<Matrix> {
    let big_l = state.depth();
    (1..=big_l)
        .map(|l| {
            let mut delta = Matrix::identity(state.width());
            for k in l..big_l {
                delta = state.weight(k + 1).matmul(&delta.scale_rows(state.jac_diag(k)));
            }
            delta
        })
        .collect()
}

/// `Σ_ℓ q̂_{ℓ−1} δ_{L→ℓ} δ_{L→ℓ}ᵀ`.
pub fn delta_chain_sum(state: &NetworkState) -> Matrix {
    let n = state.width();
    let mut sum = Matrix::zeros(n, n);
    for (l, delta) in delta_chains(state).iter().enumerate() {
        sum = sum.add(&delta.gram().scale(state.qhat(l)));
    }
    sum
}

/// `D_L H_L D_L`, the dual of the conditional FIM.
pub fn fim_dual(state: &NetworkState) -> Matrix {
    let hs = fim_recursion(state);
    let d = state.jac_diag(state.depth());
    hs[hs.len() - 1].scale_rows(d).scale_cols(d)
}

/// Dense `J_θ = ∂x^L/∂θ` (`N × L·N²`). Column `(ℓ−1)·N² + i·N + j` is the
/// derivative with respect to `(W_ℓ)_{ij}`, which equals
/// `x^{ℓ−1}_j · D_L δ_{L→ℓ} e_i`.
pub fn parameter_jacobian_oracle(state: &NetworkState) -> Result<Matrix> {
    let n = state.width();
    if n > ORACLE_MAX_WIDTH {
        return Err(Error::EnvelopeExceeded { n, max: ORACLE_MAX_WIDTH });
    }
    let big_l = state.depth();
    let dl = state.jac_diag(big_l);
    let cols = big_l * n * n;
    let mut out = Matrix::zeros(n, cols);
    for (l0, delta) in delta_chains(state).iter().enumerate() {
        let g = delta.scale_rows(dl);
        let xprev = state.post(l0);
        let base = l0 * n * n;
        for row in 0..n {
            for i in 0..n {
                let gi = g.get(row, i);
                for (j, &xj) in xprev.iter().enumerate() {
                    out.set(row, base + i * n + j, gi * xj);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_fields() {
        let mut cfg = MlpConfig::uniform(2, 8, 1.0, Activation::Tanh);
        assert!(cfg.validate().is_ok());
        cfg.sigma_w[1] = -1.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("sigma_w[2]"), "{msg}");
        assert!(MlpConfig::uniform(1, 1, 1.0, Activation::Tanh).validate().is_err());
        assert!(MlpConfig::uniform(0, 4, 1.0, Activation::Tanh).validate().is_err());
    }

    #[test]
    fn relu_fixed_point_profile() {
        let cfg = MlpConfig::uniform(4, 16, 2f64.sqrt(), Activation::Relu);
        let p = theory_profile(&cfg, &GaussHermiteRule::default()).unwrap();
        assert_eq!(p.r(0), 1.0);
        for l in 1..=4 {
            assert!((p.q(l) - 2.0).abs() < 1e-12);
            assert!((p.r(l) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_pass_bookkeeping() {
        let cfg = MlpConfig::uniform(2, 12, 1.3, Activation::Relu);
        let s = sample_network(&cfg, &SeededRng::new(5, 0)).unwrap();
        assert!((s.qhat(0) - 1.0).abs() < 1e-12);
        let ratio = norm2(s.pre(1)) / norm2(s.post(0));
        assert!((ratio - 1.3).abs() < 1e-10);
        for l in 1..=2 {
            assert!(s.jac_diag(l).iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
}
