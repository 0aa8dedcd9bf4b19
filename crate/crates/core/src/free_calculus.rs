//! S-transform arithmetic on truncated moment series and the limit-spectrum
//! pipelines for `J_ℓJ_ℓᵀ` and `H_ℓ`.
//!
//! With `M(z) = Σ_{n≥1} m_n zⁿ`, the S-transform is
//! `S(z) = (1 + z)/z · M^{⟨−1⟩}(z)`. Writing `M^{⟨−1⟩}(z) = Σ b_n zⁿ`, its
//! coefficients are `s_n = b_{n+1} + b_n` (`b₀ = 0`), so `K` moments
//! determine `s₀ … s_{K−1}` and vice versa.

use crate::activations::derivative_square_moments;
use crate::error::{Error, Result};
use crate::mlp::{theory_profile, MlpConfig};
use crate::quadrature::GaussHermiteRule;
use crate::series::{MomentSeries, PowerSeries, STransform};

/// Default truncation order of the predicted moment series.
pub const DEFAULT_ORDER: usize = 12;

/// First moments smaller than this are treated as zero.
pub const MIN_FIRST_MOMENT: f64 = 1e-12;

pub fn series_reversion(p: &PowerSeries) -> Result<PowerSeries> {
    p.reversion()
}

fn check_first_moment(m: &MomentSeries, context: &str) -> Result<()> {
    let m1 = m.first();
    if m1.is_nan() || m1.abs() < MIN_FIRST_MOMENT {
        return Err(Error::UndefinedTransform {
            first_moment: m1,
            context: context.to_string(),
        });
    }
    Ok(())
}

pub fn s_transform(m: &MomentSeries) -> Result<STransform> {
    check_first_moment(m, "s_transform")?;
    let b = m.generating_series().reversion()?;
    let k = b.order();
    let s = (0..k).map(|n| b.coeff(n + 1) + b.coeff(n)).collect();
    STransform::new(s)
}

pub fn moments_from_s(s: &STransform) -> Result<MomentSeries> {
    let c = s.coeffs();
    if c[0] == 0.0 {
        return Err(Error::NonInvertibleSeries(0.0));
    }
    // b(z) = z/(1+z)·S(z): b_n = Σ_{j<n} (−1)^{n−1−j} s_j.
    let mut b = Vec::with_capacity(c.len());
    let mut acc = 0.0;
    for &sj in c {
        acc = sj - acc;
        b.push(acc);
    }
    let m = PowerSeries::new(b)?.reversion()?;
    MomentSeries::new(m.coeffs().to_vec())
}

/// Moments of `μ ⊠ ν`, truncated to the shorter input.
pub fn free_multiplicative_convolution(mu: &MomentSeries, nu: &MomentSeries) -> Result<MomentSeries> {
    check_first_moment(mu, "free_multiplicative_convolution (left factor)")?;
    check_first_moment(nu, "free_multiplicative_convolution (right factor)")?;
    let s = s_transform(mu)?.product(&s_transform(nu)?);
    moments_from_s(&s)
}

/// Moments of `shift + scale·X` for `X ∼ m`.
pub fn affine_pushforward(m: &MomentSeries, shift: f64, scale: f64) -> MomentSeries {
    let k = m.order();
    let mut out = Vec::with_capacity(k);
    for n in 1..=k {
        // Σ_j C(n,j) shift^{n−j} scale^j m_j
        let mut binom = 1.0;
        let mut total = 0.0;
        for j in 0..=n {
            if j > 0 {
                binom = binom * (n - j + 1) as f64 / j as f64;
            }
            total += binom * shift.powi((n - j) as i32) * scale.powi(j as i32) * m.moment(j);
        }
        out.push(total);
    }
    MomentSeries::new(out).expect("pushforward of finite moments is finite")
}

/// Moments of `c·X`.
pub fn dilate(m: &MomentSeries, c: f64) -> MomentSeries {
    let mut p = 1.0;
    let out = m
        .moments()
        .iter()
        .map(|&x| {
            p *= c;
            p * x
        })
        .collect();
    MomentSeries::new(out).expect("dilation of finite moments is finite")
}

fn nu_series(cfg: &MlpConfig, q: &[f64], order: usize, rule: &GaussHermiteRule) -> Result<Vec<MomentSeries>> {
    q.iter()
        .enumerate()
        .map(|(i, &ql)| {
            let nu = derivative_square_moments(cfg.activations[i], ql, order, rule)?;
            check_first_moment(&nu, &format!("layer {} derivative law ({})", i + 1, cfg.activations[i]))?;
            Ok(nu)
        })
        .collect()
}

fn check_prediction_layer(cfg: &MlpConfig, layer: usize, order: usize) -> Result<()> {
    cfg.validate()?;
    if layer == 0 || layer > cfg.depth {
        return Err(Error::InvalidArgument(format!("layer {layer} outside 1..={}", cfg.depth)));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    Ok(())
}

/// Limit moments of `J_ℓJ_ℓᵀ`: `ξ₁ = σ²₁·ν₁` and
/// `ξ_{k+1} = ξ_k ⊠ (σ²_{k+1}·ν_{k+1})`, where `ν_k` is the law of
/// `φ_k′(h)²`, `h ∼ N(0, q_k)`.
pub fn predict_xi(cfg: &MlpConfig, layer: usize, order: usize, rule: &GaussHermiteRule) -> Result<MomentSeries> {
    check_prediction_layer(cfg, layer, order)?;
    let profile = theory_profile(cfg, rule)?;
    let nus = nu_series(cfg, &profile.q[..layer], order, rule)?;
    let mut xi = dilate(&nus[0], cfg.sigma2(1));
    for (k, nu) in nus.iter().enumerate().skip(1) {
        xi = free_multiplicative_convolution(&xi, &dilate(nu, cfg.sigma2(k + 1)))?;
    }
    Ok(xi)
}

/// Limit moments of `H_ℓ`: `μ₁ = δ_{r²}` and
/// `μ_{k+1} = (r_k² + σ²_{k+1}·)_*(μ_k ⊠ ν_k)`, where `r_k²` is the limit
/// of `q̂_k`.
pub fn predict_mu(cfg: &MlpConfig, layer: usize, order: usize, rule: &GaussHermiteRule) -> Result<MomentSeries> {
    check_prediction_layer(cfg, layer, order)?;
    let profile = theory_profile(cfg, rule)?;
    let nus = nu_series(cfg, &profile.q[..layer - 1], order, rule)?;
    let mut mu = MomentSeries::point_mass(profile.r2(0), order)?;
    for (k0, nu) in nus.iter().enumerate() {
        let k = k0 + 1;
        let prod = free_multiplicative_convolution(&mu, nu)?;
        mu = affine_pushforward(&prod, profile.r2(k), cfg.sigma2(k + 1));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_transform_is_constant() {
        let s = s_transform(&MomentSeries::point_mass(2.5, 8).unwrap()).unwrap();
        assert!((s.constant() - 0.4).abs() < 1e-15);
        assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
    }

    #[test]
    fn zero_mean_is_rejected() {
        let m = MomentSeries::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(s_transform(&m), Err(Error::UndefinedTransform { .. })));
    }

    #[test]
    fn pushforward_examples() {
        let one = MomentSeries::point_mass(1.0, 3).unwrap();
        assert_eq!(affine_pushforward(&one, 1.0, 2.0).moments(), &[3.0, 9.0, 27.0]);
        let zero = MomentSeries::point_mass(0.0, 3).unwrap();
        assert_eq!(affine_pushforward(&zero, 0.5, 7.0).moments(), &[0.5, 0.25, 0.125]);
    }
}
