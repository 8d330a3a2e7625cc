//! Monte Carlo harness for learning-rate selection studies.

pub mod config;
pub mod runner;
pub mod summary;

pub use config::{Experiment, ExperimentConfig};
pub use runner::{run_experiment, simulate, toy_curve, RunOptions, RunSummary};
pub use summary::{read_records, summarize_records, SummaryRow, SummaryTable};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("records line {line}: {message}")]
    Schema { line: u64, message: String },
    #[error(transparent)]
    Core(#[from] gbcal_core::Error),
}

impl BenchError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            _ => 1,
        }
    }
}
