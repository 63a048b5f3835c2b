use thiserror::Error;

/// Errors raised by model construction, certification and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural constraint on a model is violated (e.g. mixture weights not summing to zero).
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// The remainder bound is so large that no level satisfies the applicability window.
    #[error("infeasible: remainder bound d = {d} leaves an empty applicability window (need d < 1/2)")]
    Infeasible { d: f64 },

    /// The requested level is not strictly inside `(lo, hi)`.
    #[error("alpha = {alpha} is outside the applicability window ({lo}, {hi})")]
    AlphaOutOfRange { alpha: f64, lo: f64, hi: f64 },

    #[error("transform domain error: {0}")]
    TransformDomain(String),

    /// The operation does not apply to this kind of transform.
    #[error("unsupported transform kind: {0}")]
    Kind(String),

    #[error("transform is not strictly increasing: {0}")]
    Monotonicity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
