use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite integrand value {value} at quadrature node x = {node}")]
    NonFiniteIntegrand { node: f64, value: f64 },

    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),

    #[error("density does not integrate to one: integral = {integral}")]
    NotNormalized { integral: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("posterior undefined: every atom has zero density at x = {x}")]
    ZeroLikelihood { x: f64 },

    #[error("restriction undefined: set has zero posterior mass")]
    EmptyRestriction,

    #[error("non-positive likelihood ratio {ratio} at step {step}")]
    NonPositiveRatio { step: usize, ratio: f64 },

    #[error("identity check failed at step {step}: gap {gap:e}")]
    IdentityViolation { step: usize, gap: f64 },

    #[error("need at least {required} replicates, got {got}")]
    TooFewReplicates { required: usize, got: usize },

    #[error("truth density is unbounded; sup f0 must be finite")]
    UnboundedTruth,

    #[error("cover cells overlap at cell {index}")]
    CellOverlap { index: usize },

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
