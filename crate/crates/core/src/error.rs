use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by samplers, environments, the oracle and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or constructor received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller broke a documented precondition (e.g. a state outside the unit ball).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Brute-force enumeration was requested on an instance that is too large.
    #[error("instance too large for enumeration: {policies} policies exceed the limit of {limit}")]
    InstanceTooLarge { policies: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input in {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than the runtime environment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parameter(_) | Error::Contract(_) | Error::Config(_) | Error::Parse { .. } => true,
            Error::InstanceTooLarge { .. } => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
