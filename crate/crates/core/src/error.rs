use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("potential not admissible at t = {t}: c = {c} outside [{lower}, {upper}]")]
    Inadmissible {
        t: f64,
        c: f64,
        lower: f64,
        upper: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("power-law roots are complex for c = {c} > N^2/4 = {limit} (oscillatory regime)")]
    ComplexRoots { c: f64, limit: f64 },

    #[error("comparison precondition violated at node {index} (t = {t}): c1 = {c1} > c2 = {c2}")]
    OrderingViolated {
        index: usize,
        t: f64,
        c1: f64,
        c2: f64,
    },

    #[error("no monotone interpolant for the supplied endpoint data: {0}")]
    NoMonotoneInterpolant(String),

    #[error("stage {stage} is not representable in double precision; at most {max_stages} stages are feasible")]
    TooManyStages { stage: usize, max_stages: usize },

    #[error("selection rule failed at stage {stage}: {reason}")]
    SelectionFailed { stage: usize, reason: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("profile is not positive at node {index} (t = {t}); positivity of the linearized solution failed")]
    NotPositive { index: usize, t: f64 },

    #[error("no zero found before radius cap {cap}")]
    NoZero { cap: f64 },

    #[error("evaluation at s = {s} beyond table end s_max = {s_max} with extrapolation disabled")]
    OutsideTable { s: f64, s_max: f64 },

    #[error("grid too shallow: t_min = {t_min}, need at most {required}")]
    InsufficientDepth { t_min: f64, required: f64 },

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
