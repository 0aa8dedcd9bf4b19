//! Empirical spectral distributions and the statistics computed from them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{dot, symmetric_eigenvalues, Matrix};
use crate::series::MomentSeries;

/// Eigenvalues of a symmetric `N × N` matrix, ascending; represents
/// `N⁻¹ Σ δ_{λᵢ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    eigenvalues: Vec<f64>,
}

impl EmpiricalSpectrum {
    /// Sorts the values; rejects an empty or non-finite list.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("spectrum needs at least one eigenvalue");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("spectrum has non-finite eigenvalues");
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalSpectrum { eigenvalues: values })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Source dimension `N`.
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Fraction of eigenvalues within `tol` of `value`.
    pub fn fraction_near(&self, value: f64, tol: f64) -> f64 {
        let hits = self.eigenvalues.iter().filter(|&&v| (v - value).abs() <= tol).count();
        hits as f64 / self.size() as f64
    }
}

pub fn spectrum_of(a: &Matrix) -> Result<EmpiricalSpectrum> {
    EmpiricalSpectrum::from_values(symmetric_eigenvalues(a)?)
}

/// `m_k = N⁻¹ Σ λᵢ^k`, `k = 1..=max_order`.
pub fn empirical_moments(s: &EmpiricalSpectrum, max_order: usize) -> Result<MomentSeries> {
    if max_order == 0 {
        return invalid("moment order must be at least 1");
    }
    MomentSeries::of_samples(&s.eigenvalues, max_order)
}

/// `tr(A^k)` for `k = 1..=max_order` without an eigendecomposition, using
/// `tr(A^{2j}) = ‖A^j‖²_F/N` and `tr(A^{2j+1}) = ⟨A^j, A^{j+1}⟩_F/N` (valid
/// for symmetric `A`). About `⌈max_order/2⌉ − 1` matrix products.
pub fn trace_moments(a: &Matrix, max_order: usize) -> Result<MomentSeries> {
    if !a.is_square() {
        return invalid("trace moments need a square matrix");
    }
    if max_order == 0 {
        return invalid("moment order must be at least 1");
    }
    let n = a.rows() as f64;
    let mut out = Vec::with_capacity(max_order);
    out.push(a.trace() / n);
    // powers[j] = A^{j+1}
    let mut powers = vec![a.clone()];
    for k in 2..=max_order {
        let j = k / 2;
        while powers.len() < j + k % 2 {
            let next = powers[powers.len() - 1].matmul(a);
            powers.push(next);
        }
        let aj = powers[j - 1].as_slice();
        let v = if k % 2 == 0 {
            dot(aj, aj)
        } else {
            dot(aj, powers[j].as_slice())
        };
        out.push(v / n);
    }
    MomentSeries::new(out)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of
/// `samples` and `N(mean, variance)`.
pub fn ks_distance_to_gaussian(samples: &[f64], mean: f64, variance: f64) -> Result<f64> {
    if samples.is_empty() {
        return invalid("KS distance needs at least one sample");
    }
    if !(variance.is_finite() && variance > 0.0) {
        return invalid(format!("variance must be positive, got {variance}"));
    }
    let mut x = samples.to_vec();
    if x.iter().any(|v| v.is_nan()) {
        return invalid("KS samples contain NaN");
    }
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let sd = variance.sqrt();
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = normal_cdf((v - mean) / sd);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

/// Equal-width bins over `[min, max]`. A value on an interior edge goes to
/// the bin above it; the maximum goes to the last bin. A spectrum with a
/// single distinct value gets a unit-width range centred on it.
pub fn histogram(s: &EmpiricalSpectrum, bins: usize) -> Result<Histogram> {
    histogram_of_values(s.eigenvalues(), bins)
}

pub fn histogram_of_values(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return invalid("histogram needs at least one bin");
    }
    if values.is_empty() {
        return invalid("histogram of an empty list");
    }
    let (mut lo, mut hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return invalid("histogram values must be finite");
    }
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts, total: values.len() })
}
