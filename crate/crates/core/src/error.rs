use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("{0}")]
    InvalidConfiguration(String),

    #[error(
        "quadrature did not converge for {what}: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    NonConvergence {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Consistency(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
