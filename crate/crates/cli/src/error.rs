use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 physics or solver failure, 2 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Io(_) => 1,
        }
    }
}

impl From<floquet_core::Error> for CliError {
    fn from(e: floquet_core::Error) -> Self {
        match e {
            floquet_core::Error::InvalidParameter(m) => Self::Config(m),
            other => Self::Solver(other.to_string()),
        }
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
