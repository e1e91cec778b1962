use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid family size: {0}")]
    Sizing(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("family is empty")]
    EmptyFamily,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("base arm {arm} lies outside 1..={d}")]
    ArmOutOfRange { arm: usize, d: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("weights do not form a distribution: {0}")]
    NotADistribution(String),

    #[error("target is not in the convex hull of the family (residual {residual:e})")]
    Decomposition { residual: f64 },

    #[error("projection solver did not converge after {iterations} iterations (gap {gap:e})")]
    Solver { iterations: usize, gap: f64 },

    /// The computation is well defined but the exploration exponent voids the
    /// Pareto guarantee. Callers that want to run anyway can use the
    /// unchecked constructors.
    #[error("alpha = {alpha} lies outside the Pareto range [0, {max}]")]
    AlphaOutsideParetoRange { alpha: f64, max: f64 },

    #[error("state error: {0}")]
    State(String),

    #[error("observation does not match the selected super arm: {0}")]
    ObservationMismatch(String),

    #[error("trial {trial}: {source}")]
    Trial { trial: usize, source: Box<Error> },

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by the caller's configuration rather than
    /// a failure during the run.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Sizing(_)
            | Error::InvalidFamily(_)
            | Error::EmptyFamily
            | Error::InvalidParameter(_)
            | Error::ArmOutOfRange { .. }
            | Error::AlphaOutsideParetoRange { .. }
            | Error::Format(_) => true,
            Error::Trial { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
