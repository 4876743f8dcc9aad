use thiserror::Error;

/// Errors raised by the laboratory routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation would exceed a configured size cap or available memory.
    #[error("resource limit exceeded: {what} (requires about {required})")]
    Resource { what: String, required: u64 },

    /// A numerical routine could not reach its tolerance.
    #[error("numeric error: {message} (residual estimate {residual:.3e})")]
    Numeric { message: String, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed cache file or interchange text.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(what: impl Into<String>, required: u64) -> Self {
        Error::Resource {
            what: what.into(),
            required,
        }
    }

    pub(crate) fn numeric(message: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            residual,
        }
    }
}
