use thiserror::Error;

/// Errors produced by the numerical kernels and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("power series is not invertible: leading coefficient {0} is zero")]
    NonInvertibleSeries(f64),

    #[error("S-transform undefined: first moment {first_moment:e} is zero ({context})")]
    UndefinedTransform { first_moment: f64, context: String },

    #[error("malformed word: {0}")]
    MalformedWord(String),

    #[error("dense oracle envelope exceeded: N = {n} > {max}")]
    EnvelopeExceeded { n: usize, max: usize },

    #[error("vector is numerically zero")]
    ZeroVector,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of an iterative numerical routine.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NotSymmetric { .. }
                | Error::NonInvertibleSeries(_)
                | Error::UndefinedTransform { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
