//! Numerical free-probability laboratory for Haar-orthogonal multilayer
//! perceptrons.
//!
//! The crate samples orthogonally initialized networks, measures the spectra
//! of their input Jacobians and conditional Fisher information matrices,
//! predicts the large-width limits of those spectra with S-transform series
//! arithmetic, and runs statistical checks of asymptotic freeness.
//!
//! Module map:
//!
//! * [`linalg`] and [`rng`]: dense matrices, eigen/SVD kernels, seeded
//!   Gaussian and Haar-orthogonal sampling.
//! * [`activations`] and [`quadrature`]: activation catalog and Gaussian
//!   expectations.
//! * [`mlp`]: network sampling, Jacobian chains, the FIM recursion.
//! * [`spectral`]: empirical spectra, moments, histograms, KS distances.
//! * [`series`] and [`free_calculus`]: power series, S-transforms and
//!   free multiplicative convolution.
//! * [`freeness`]: invariance, cutoff and alternating-moment checks.
//! * [`harness`]: JSON-configured experiment runner behind the `freejac` CLI.

pub mod activations;
pub mod error;
pub mod free_calculus;
pub mod freeness;
pub mod harness;
pub mod linalg;
pub mod mlp;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod series;
pub mod spectral;

pub use activations::Activation;
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mlp::{InputMode, MlpConfig, NetworkState, TheoryProfile};
pub use rng::SeededRng;
pub use series::{MomentSeries, PowerSeries, STransform};
pub use spectral::EmpiricalSpectrum;
