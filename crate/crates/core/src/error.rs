use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index arithmetic overflow: {0}")]
    IndexOverflow(String),

    /// `f(λ) = 0`: the normalized sums converge to zero rather than to a
    /// non-degenerate normal law.
    #[error("spectral density vanishes at the base frequency (f = {0}); the limit law is degenerate")]
    DegenerateSpectrum(f64),

    #[error("combinatorial budget exceeded: {count} candidate pairs, budget is {budget}")]
    BudgetExceeded { count: u64, budget: u64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Consistency(_) => 2,
            _ => 1,
        }
    }
}
