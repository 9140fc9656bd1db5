use thiserror::Error;

/// Errors surfaced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's contract.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data is malformed (wrong shape, non-finite entries, bad labels).
    #[error("input error: {0}")]
    Input(String),

    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An iterative routine hit its iteration cap before converging.
    #[error("no convergence after {iterations} iterations: {context}")]
    NoConvergence { iterations: usize, context: String },
}

pub type Result<T> = std::result::Result<T, Error>;
