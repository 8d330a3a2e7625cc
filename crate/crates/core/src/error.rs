use thiserror::Error;

/// Failure signals shared by every layer of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0} is not supported by this model")]
    Unsupported(&'static str),

    /// Iterative solver gave up; `last` is the final iterate.
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize, last: Vec<f64> },

    /// Fit exists only at infinity or the design is singular.
    #[error("degenerate fit: {0}")]
    Degenerate(String),

    /// The requested posterior is not a probability distribution.
    #[error("improper posterior: {0}")]
    ImproperPosterior(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
