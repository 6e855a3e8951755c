use conalloc_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    /// Two input files that do not describe the same construction.
    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("{count} face(s) could not be mapped and were left undefined")]
    PartialFailure { count: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    /// 0 success, 1 usage, 2 data or format, 3 numerical failure,
    /// 4 invariant violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                CoreError::Parameter(_) | CoreError::Resolution(_) => 1,
                CoreError::Parse { .. } | CoreError::Io { .. } | CoreError::Degeneracy(_) => 2,
                CoreError::Pole(_)
                | CoreError::NumericalFailure { .. }
                | CoreError::Crowding(_) => 3,
            },
            CliError::Consistency(_) => 2,
            CliError::PartialFailure { .. } => 3,
            CliError::Invariant(_) => 4,
        }
    }
}
