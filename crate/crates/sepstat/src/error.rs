use sepstat_core::Error as CoreError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    /// Reading or writing files failed.
    Io = 1,
    Validation = 2,
    /// The model has no solution for the input (outside the equipartition
    /// region).
    Infeasible = 3,
    NonConvergence = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::Validation,
            CliError::Io(_) => ExitCode::Io,
            CliError::Core(e) => match e {
                CoreError::ConstraintsUnsatisfiable { .. } => ExitCode::Infeasible,
                CoreError::QuadratureNonConvergence { .. } => ExitCode::NonConvergence,
                _ => ExitCode::Validation,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
