//! The activation catalog, derivatives, and Gaussian moments of `φ′²`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gaussian_expectation, gaussian_expectation_piecewise, GaussHermiteRule};
use crate::series::MomentSeries;

pub const DEFAULT_SHIFT: f64 = 0.5;

/// `sup |silu′|`, attained near `x ≈ 2.3994`.
const SILU_DERIV_SUP: f64 = 1.099_839_320_128_867;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Activation {
    Relu,
    /// `x` for `x ≥ α`, `α` otherwise.
    ShiftedRelu { alpha: f64 },
    HardTanh,
    Tanh,
    Sigmoid,
    Silu,
    Erf,
}

/// Which one-sided limit `deriv` reports at a kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KinkConvention {
    #[default]
    Right,
    Left,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub const ALL_NAMES: [&'static str; 7] = ["relu", "shifted_relu", "hard_tanh", "tanh", "sigmoid", "silu", "erf"];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x >= 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::ShiftedRelu { alpha } => {
                if x >= alpha {
                    x
                } else {
                    alpha
                }
            }
            Activation::HardTanh => x.clamp(-1.0, 1.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Silu => x * sigmoid(x),
            Activation::Erf => libm::erf(x),
        }
    }

    /// Derivative; at a kink the right limit is returned.
    pub fn deriv(self, x: f64) -> f64 {
        self.deriv_with(x, KinkConvention::Right)
    }

    pub fn deriv_with(self, x: f64, conv: KinkConvention) -> f64 {
        let step = |inside: bool, at_kink: bool, right: f64, left: f64| {
            if at_kink {
                match conv {
                    KinkConvention::Right => right,
                    KinkConvention::Left => left,
                }
            } else if inside {
                1.0
            } else {
                0.0
            }
        };
        match self {
            Activation::Relu => step(x > 0.0, x == 0.0, 1.0, 0.0),
            Activation::ShiftedRelu { alpha } => step(x > alpha, x == alpha, 1.0, 0.0),
            Activation::HardTanh => {
                if x == -1.0 {
                    step(false, true, 1.0, 0.0)
                } else if x == 1.0 {
                    step(false, true, 0.0, 1.0)
                } else {
                    step(x > -1.0 && x < 1.0, false, 0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Erf => std::f64::consts::FRAC_2_SQRT_PI * (-x * x).exp(),
        }
    }

    /// Points where `φ′` jumps.
    pub fn kinks(self) -> Vec<f64> {
        match self {
            Activation::Relu => vec![0.0],
            Activation::ShiftedRelu { alpha } => vec![alpha],
            Activation::HardTanh => vec![-1.0, 1.0],
            _ => vec![],
        }
    }

    /// `sup |φ′|`.
    pub fn deriv_bound(self) -> f64 {
        match self {
            Activation::Relu | Activation::ShiftedRelu { .. } | Activation::HardTanh | Activation::Tanh => 1.0,
            Activation::Sigmoid => 0.25,
            Activation::Silu => SILU_DERIV_SUP,
            Activation::Erf => std::f64::consts::FRAC_2_SQRT_PI,
        }
    }

    /// `E[f(h)]` for `h ∼ N(0, q)` where `f` inherits this activation's kinks.
    /// Smooth activations use `rule`; kinked ones use panels split at the kinks.
    pub fn expectation(self, q: f64, rule: &GaussHermiteRule, f: impl Fn(f64) -> f64) -> Result<f64> {
        let kinks = self.kinks();
        if kinks.is_empty() {
            gaussian_expectation(f, q, rule)
        } else {
            gaussian_expectation_piecewise(f, q, &kinks)
        }
    }

    /// `E[φ(h)²]`, `h ∼ N(0, q)`.
    pub fn second_moment(self, q: f64, rule: &GaussHermiteRule) -> Result<f64> {
        self.expectation(q, rule, |x| {
            let y = self.eval(x);
            y * y
        })
    }
}

/// Moments `m_k = E[φ′(h)^{2k}]`, `k = 1..=max_order`, of the law of `φ′(h)²`
/// with `h ∼ N(0, q)`.
pub fn derivative_square_moments(
    a: Activation,
    q: f64,
    max_order: usize,
    rule: &GaussHermiteRule,
) -> Result<MomentSeries> {
    if max_order == 0 {
        return invalid("moment order must be at least 1");
    }
    let moments = (1..=max_order)
        .map(|k| {
            a.expectation(q, rule, |x| {
                let d = a.deriv(x);
                (d * d).powi(k as i32)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MomentSeries::new(moments)
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => f.write_str("relu"),
            Activation::ShiftedRelu { alpha } => write!(f, "shifted_relu({alpha})"),
            Activation::HardTanh => f.write_str("hard_tanh"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::Sigmoid => f.write_str("sigmoid"),
            Activation::Silu => f.write_str("silu"),
            Activation::Erf => f.write_str("erf"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    /// Accepts the lowercase names; `shifted_relu` optionally takes its shift
    /// as `shifted_relu(0.3)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let simple = match s {
            "relu" => Some(Activation::Relu),
            "shifted_relu" => Some(Activation::ShiftedRelu { alpha: DEFAULT_SHIFT }),
            "hard_tanh" => Some(Activation::HardTanh),
            "tanh" => Some(Activation::Tanh),
            "sigmoid" => Some(Activation::Sigmoid),
            "silu" => Some(Activation::Silu),
            "erf" => Some(Activation::Erf),
            _ => None,
        };
        if let Some(a) = simple {
            return Ok(a);
        }
        if let Some(arg) = s.strip_prefix("shifted_relu(").and_then(|r| r.strip_suffix(')')) {
            let alpha: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad shifted_relu parameter {arg:?}")))?;
            if !alpha.is_finite() {
                return invalid("shifted_relu parameter must be finite");
            }
            return Ok(Activation::ShiftedRelu { alpha });
        }
        invalid(format!(
            "unknown activation {s:?}; expected one of {}",
            Activation::ALL_NAMES.join(", ")
        ))
    }
}

impl TryFrom<String> for Activation {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Activation> for String {
    fn from(a: Activation) -> String {
        a.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(Activation::Relu.eval(-1.0), 0.0);
        assert_eq!(Activation::Relu.eval(2.0), 2.0);
        assert_eq!(Activation::HardTanh.eval(5.0), 1.0);
        assert_eq!(Activation::HardTanh.eval(-5.0), -1.0);
        assert_eq!(Activation::Tanh.eval(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.eval(0.0), 0.5);
        assert_eq!(Activation::ShiftedRelu { alpha: 0.5 }.eval(-3.0), 0.5);
    }

    #[test]
    fn kink_conventions() {
        assert_eq!(Activation::Relu.deriv(0.0), 1.0);
        assert_eq!(Activation::Relu.deriv_with(0.0, KinkConvention::Left), 0.0);
        assert_eq!(Activation::HardTanh.deriv(1.0), 0.0);
        assert_eq!(Activation::HardTanh.deriv(-1.0), 1.0);
        assert_eq!(Activation::HardTanh.deriv_with(1.0, KinkConvention::Left), 1.0);
    }

    #[test]
    fn names_roundtrip() {
        for name in ["relu", "hard_tanh", "tanh", "sigmoid", "silu", "erf", "shifted_relu(0.3)"] {
            let a: Activation = name.parse().unwrap();
            assert_eq!(a.to_string(), name);
        }
        assert_eq!("shifted_relu".parse::<Activation>().unwrap(), Activation::ShiftedRelu { alpha: 0.5 });
        assert!("gelu".parse::<Activation>().is_err());
        assert!("shifted_relu(x)".parse::<Activation>().is_err());
    }

    #[test]
    fn relu_moments_are_one_half() {
        let rule = GaussHermiteRule::default();
        for q in [0.3, 1.0, 2.0] {
            let m = derivative_square_moments(Activation::Relu, q, 6, &rule).unwrap();
            assert!(m.moments().iter().all(|x| (x - 0.5).abs() < 1e-13));
        }
    }
}
