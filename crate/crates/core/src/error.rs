use std::fmt;

use thiserror::Error;

/// Evidence that the expected maximum sojourn of a batch is infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceEvidence {
    /// Fitted slope `b` of the partial sums against `a + b ln T`.
    pub growth_rate: f64,
    /// RMS residual of that fit relative to the total rise of the partial sums.
    pub relative_residual: f64,
    /// Ratio of the partial-sum increments over the second and first decade.
    pub decade_ratio: f64,
    /// `(T, partial sum up to T)` pairs the fit was computed from.
    pub partial_sums: Vec<(f64, f64)>,
}

impl fmt::Display for DivergenceEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "partial sums of E[max sojourn] grow like {:.4} ln T (relative residual {:.3}, decade ratio {:.3})",
            self.growth_rate, self.relative_residual, self.decade_ratio
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("stationary distribution does not exist: {0}")]
    Diverges(Box<DivergenceEvidence>),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
