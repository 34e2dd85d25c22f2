use thiserror::Error;

/// Errors are split by how the CLI reports them: validation problems
/// (bad input, violated invariants, out-of-range sizes) exit with code 2,
/// numerical failures (non-PSD matrices, non-convergence treated as fatal)
/// exit with code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for anything the user can fix by
    /// changing inputs, 3 for numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
