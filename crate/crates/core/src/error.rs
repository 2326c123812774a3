use thiserror::Error;

/// Errors raised by the rate engines, oracles and sweep plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "quadrature did not converge on [{lo}, {hi}]: error estimate {error_estimate:.3e} > \
         tolerance {tolerance:.3e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        error_estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{context}: {source}")]
    Evaluation {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }

    /// Wraps `self` with a description of the parameters being evaluated.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Evaluation {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a numerical failure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Quadrature { .. } => true,
            Error::Evaluation { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
