use thiserror::Error;

/// Harness-level errors; the variant decides the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, schema violation or malformed input data (exit 2).
    #[error("{0}")]
    Config(String),

    /// Numeric failure inside a solve (exit 3).
    #[error("{0}")]
    Numeric(String),

    /// Filesystem problem (exit 4).
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<iht_core::Error> for CliError {
    fn from(e: iht_core::Error) -> Self {
        match e {
            iht_core::Error::Parameter(m) | iht_core::Error::Input(m) => CliError::Config(m),
            iht_core::Error::Numeric(m) => CliError::Numeric(m),
            iht_core::Error::NoConvergence { iterations, context } => {
                CliError::Numeric(format!("no convergence after {iterations} iterations: {context}"))
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
