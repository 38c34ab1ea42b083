use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Inputs violate a documented precondition (shape, symmetry, range).
    #[error("validation error: {0}")]
    Validation(String),

    /// A parameter is outside its admissible domain (e.g. ν ≤ 2).
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("{}:{line}: parse error: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing metadata: {0}")]
    MissingMetadata(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A covariance block or precision matrix could not be inverted.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("gamma calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    /// Process exit code: 1 validation/config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parameter(_) | Error::Unsupported(_) => 1,
            Error::Parse { .. }
            | Error::InsufficientData(_)
            | Error::MissingMetadata(_)
            | Error::Io { .. } => 2,
            Error::Estimation(_)
            | Error::DegenerateConstraint(_)
            | Error::Infeasible(_)
            | Error::Numerical(_)
            | Error::Calibration(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
