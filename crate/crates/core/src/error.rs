use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op} did not converge: {detail}")]
    NonConvergence { op: &'static str, detail: String },

    #[error("invalid input to {op}: {detail}")]
    InvalidInput { op: &'static str, detail: String },

    #[error("non-integer shape {beta} in {op}")]
    NonIntegerShape { op: &'static str, beta: f64 },

    #[error("k3 series tail {tail:e} exceeds tolerance after {k3_max} terms (accumulated mass {mass:e})")]
    TruncationTail { k3_max: usize, tail: f64, mass: f64 },

    #[error("term count {count} exceeds cap {cap}")]
    TermExplosion { count: usize, cap: usize },

    #[error("quadrature failure in {op}: {detail}")]
    Quadrature { op: &'static str, detail: String },

    #[error("grid too small: {detail}")]
    GridTooSmall { detail: String },

    #[error("{op} requires a nonnegative-weight mixture")]
    SignedMixture { op: &'static str },

    #[error("series diverges in {op}: {detail}")]
    SeriesDivergence { op: &'static str, detail: String },

    #[error("moment of order {order} diverges: {detail}")]
    MomentDivergence { order: f64, detail: String },

    #[error("inconsistent signal case: {detail}")]
    InconsistentCase { detail: String },

    #[error("simulation window radius {window} m is below the minimum {min} m")]
    WindowTooSmall { window: f64, min: f64 },

    #[error("{op} needs at least {min} samples, got {got}")]
    TooFewSamples { op: &'static str, min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { op, detail: detail.into() }
}

pub(crate) fn invalid(op: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidInput { op, detail: detail.into() }
}
