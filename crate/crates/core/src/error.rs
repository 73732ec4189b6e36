use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (time off the
    /// horizon, probability outside (0,1), time not on the grid).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The plug-in tuple (A, w, d, μ) produced an unusable value.
    #[error("specification error: {0}")]
    Specification(String),
    /// Experiment preconditions (such as the poor-share bounds) do not hold.
    #[error("setup error: {0}")]
    Setup(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("undefined relative change: {0}")]
    UndefinedChange(String),
}

impl Error {
    /// True for failures of a numerical routine rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
