use radial_extremal::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("bound check failed: {0}")]
    Bound(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Audit(_) => 4,
            CliError::Bound(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_)
            | Error::Inadmissible { .. }
            | Error::Unsupported(_)
            | Error::ComplexRoots { .. }
            | Error::OrderingViolated { .. }
            | Error::TooManyStages { .. }
            | Error::SelectionFailed { .. }
            | Error::OutsideTable { .. }
            | Error::InsufficientDepth { .. } => CliError::Validation(msg),
            Error::NoMonotoneInterpolant(_)
            | Error::Solver(_)
            | Error::NotPositive { .. }
            | Error::NoZero { .. }
            | Error::Reconstruction(_) => CliError::Solver(msg),
            Error::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
