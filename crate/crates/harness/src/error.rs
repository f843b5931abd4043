use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] oob_covariance::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code of the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }
}
