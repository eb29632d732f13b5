//! Crate-wide error type.
//!
//! Variants are grouped so a front end can map them onto distinct exit codes:
//! configuration problems, file I/O, and numerical failures are kept apart.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// File or serialization problem.
    #[error("io error: {0}")]
    Io(String),

    /// A numerical routine failed to converge or produced an invalid result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A fit did not converge or was fed degenerate data.
    #[error("fit error: {0}")]
    Fit(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class for a front end. 2 = config, 3 = io, 4 = numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Io(_) => 3,
            Error::Numerical(_) | Error::Fit(_) => 4,
        }
    }
}
