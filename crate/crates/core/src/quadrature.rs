//! Gaussian expectations by quadrature.
//!
//! Smooth integrands use a Gauss–Hermite rule normalized for `N(0, 1)`.
//! Integrands with finitely many kinks or jumps use composite Gauss–Legendre
//! panels that break exactly at the kink locations, since a global rule only
//! converges algebraically across a discontinuity.

use std::sync::OnceLock;

use crate::error::{invalid, Result};
use crate::linalg::tridiagonal_eigen;

/// Gauss–Hermite nodes and weights for `E[f(Z)]`, `Z ∼ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub const DEFAULT_ORDER: usize = 201;

    /// Builds the `order`-point rule with Golub–Welsch on the probabilists'
    /// Hermite Jacobi matrix (zero diagonal, off-diagonal `√k`).
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return invalid("quadrature order must be at least 1");
        }
        let diag = vec![0.0; order];
        let off: Vec<f64> = (1..order).map(|k| (k as f64).sqrt()).collect();
        let (x, v0) = tridiagonal_eigen(&diag, &off)?;
        let mut nodes = x;
        let mut weights: Vec<f64> = v0.iter().map(|v| v * v).collect();
        // Enforce the exact symmetry of the rule.
        for i in 0..order / 2 {
            let j = order - 1 - i;
            let xn = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -xn;
            nodes[j] = xn;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(GaussHermiteRule { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn standard_expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl Default for GaussHermiteRule {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ORDER).expect("default Gauss-Hermite rule")
    }
}

fn check_variance(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 0.0) {
        return invalid(format!("variance must be positive and finite, got {q}"));
    }
    Ok(())
}

/// `E[f(h)]` for `h ∼ N(0, q)` with the given rule.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, q: f64, rule: &GaussHermiteRule) -> Result<f64> {
    check_variance(q)?;
    let s = q.sqrt();
    Ok(rule.standard_expectation(|x| f(s * x)))
}

const GL_POINTS: usize = 24;
/// Standard-normal coordinates beyond this contribute below `1e-40`.
const TAIL_CUTOFF: f64 = 14.0;
const MAX_PANEL_WIDTH: f64 = 1.0;

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let diag = vec![0.0; GL_POINTS];
        let off: Vec<f64> = (1..GL_POINTS)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        let (x, v0) = tridiagonal_eigen(&diag, &off).expect("Legendre Jacobi matrix");
        let w = v0.iter().map(|v| 2.0 * v * v).collect();
        (x, w)
    })
}

/// `E[f(h)]` for `h ∼ N(0, q)` by composite Gauss–Legendre panels, with panel
/// boundaries at each of `breakpoints` (in `h` units).
pub fn gaussian_expectation_piecewise(f: impl Fn(f64) -> f64, q: f64, breakpoints: &[f64]) -> Result<f64> {
    check_variance(q)?;
    let s = q.sqrt();
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .map(|b| b / s)
        .filter(|z| z.abs() < TAIL_CUTOFF)
        .collect();
    cuts.push(-TAIL_CUTOFF);
    cuts.push(TAIL_CUTOFF);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (gx, gw) = legendre_rule();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let panels = ((b - a) / MAX_PANEL_WIDTH).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let half = 0.5 * width;
            let mid = lo + half;
            let mut acc = 0.0;
            for (&x, &w) in gx.iter().zip(gw) {
                let z = mid + half * x;
                acc += w * (-0.5 * z * z).exp() * f(s * z);
            }
            total += half * acc;
        }
    }
    Ok(norm * total)
}
