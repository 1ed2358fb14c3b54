use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {operation}: {reason}")]
    Domain {
        operation: &'static str,
        reason: String,
    },

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("invalid value for `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(operation: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            operation,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}
