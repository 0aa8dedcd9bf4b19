//! Truncated formal power series and the moment data they carry.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `c₁z + c₂z² + … + c_K z^K`; there is no constant term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{what} needs at least one coefficient"));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return invalid(format!("{what} coefficient {} is not finite", i + 1));
    }
    Ok(())
}

/// Product of two coefficient vectors indexed from `z¹`, truncated to `k`
/// terms (the result is again indexed from `z¹`, so `a·b` is shifted by one).
fn mul_shifted(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    // a·b has lowest power z²; out[n] holds the coefficient of z^{n+1}.
    let mut out = vec![0.0; k];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let n = i + j + 1;
            if n >= k {
                break;
            }
            out[n] += ai * bj;
        }
    }
    out
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        check_finite(&coeffs, "power series")?;
        Ok(PowerSeries { coeffs })
    }

    /// `z ↦ c·z` truncated to order `k`.
    pub fn linear(c: f64, k: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; k];
        if let Some(first) = coeffs.first_mut() {
            *first = c;
        }
        Self::new(coeffs)
    }

    /// Truncation order K.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `[c₁, …, c_K]`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (1-based); zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.coeffs.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// `self(inner(z))` truncated to the smaller of the two orders.
    pub fn compose(&self, inner: &PowerSeries) -> PowerSeries {
        let k = self.order().min(inner.order());
        let inner = &inner.coeffs[..k];
        let mut out = vec![0.0; k];
        let mut power = inner.to_vec();
        for (idx, &c) in self.coeffs.iter().take(k).enumerate() {
            if idx > 0 {
                power = mul_shifted(&power, inner, k);
            }
            for (o, p) in out.iter_mut().zip(&power) {
                *o += c * p;
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Compositional inverse `q` with `self(q(z)) = z + O(z^{K+1})`, solved
    /// one coefficient at a time.
    pub fn reversion(&self) -> Result<PowerSeries> {
        let c1 = self.coeffs[0];
        if c1 == 0.0 {
            return Err(Error::NonInvertibleSeries(c1));
        }
        let k = self.order();
        let mut q = vec![0.0; k];
        q[0] = 1.0 / c1;
        for n in 1..k {
            // With q_{n+1} still zero, the z^{n+1} coefficient of p(q) must be
            // cancelled by c₁·q_{n+1}.
            let partial = PowerSeries { coeffs: q[..=n].to_vec() };
            let trial = self.compose(&partial);
            q[n] = -trial.coeffs[n] / c1;
        }
        PowerSeries::new(q)
    }
}

/// Moments `m₁ … m_K` of a compactly supported measure (`m₀ = 1` implied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    moments: Vec<f64>,
}

impl MomentSeries {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        check_finite(&moments, "moment series")?;
        Ok(MomentSeries { moments })
    }

    /// Moments of `Σ wᵢ δ_{xᵢ}` up to order `k`.
    pub fn from_atoms(atoms: &[(f64, f64)], k: usize) -> Result<Self> {
        let moments = (1..=k)
            .map(|j| atoms.iter().map(|&(x, w)| w * x.powi(j as i32)).sum())
            .collect();
        Self::new(moments)
    }

    /// `δ_γ`: `m_k = γ^k`.
    pub fn point_mass(gamma: f64, k: usize) -> Result<Self> {
        Self::from_atoms(&[(gamma, 1.0)], k)
    }

    /// Empirical moments `N⁻¹ Σ λᵢ^k` of a finite sample.
    pub fn of_samples(samples: &[f64], k: usize) -> Result<Self> {
        if samples.is_empty() {
            return invalid("moments of an empty sample");
        }
        let mut sums = vec![0.0; k];
        for &x in samples {
            let mut p = 1.0;
            for s in sums.iter_mut() {
                p *= x;
                *s += p;
            }
        }
        let n = samples.len() as f64;
        Self::new(sums.into_iter().map(|s| s / n).collect())
    }

    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `[m₁, …, m_K]`.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// `m_k` (1-based); `m₀ = 1`.
    pub fn moment(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.moments[k - 1]
        }
    }

    pub fn first(&self) -> f64 {
        self.moments[0]
    }

    /// Keeps the first `k` moments.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.order() {
            return invalid(format!("cannot truncate order {} series to {k}", self.order()));
        }
        Ok(MomentSeries { moments: self.moments[..k].to_vec() })
    }

    /// The moment generating series `M(z) = Σ m_n zⁿ`.
    pub fn generating_series(&self) -> PowerSeries {
        PowerSeries { coeffs: self.moments.clone() }
    }

    /// Checks the order-1 Hankel determinant `m₂ − m₁² ≥ −1e-9` expected of
    /// a positive measure.
    pub fn check_positive(&self) -> Result<()> {
        if self.order() >= 2 {
            let det = self.moments[1] - self.moments[0] * self.moments[0];
            if det < -1e-9 {
                return invalid(format!("moments fail Hankel positivity: m2 - m1^2 = {det:e}"));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &MomentSeries) -> f64 {
        self.moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Coefficients `s₀ … s_{K−1}` of `S(z)` around `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct STransform {
    coeffs: Vec<f64>,
}

impl STransform {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        check_finite(&coeffs, "S-transform")?;
        Ok(STransform { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn constant(&self) -> f64 {
        self.coeffs[0]
    }

    /// Cauchy product, truncated to the shorter of the two.
    pub fn product(&self, other: &STransform) -> STransform {
        let k = self.order().min(other.order());
        let mut out = vec![0.0; k];
        for (i, &a) in self.coeffs.iter().take(k).enumerate() {
            for (j, &b) in other.coeffs.iter().take(k - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        STransform { coeffs: out }
    }
}
