use thiserror::Error;

/// Errors produced by the estimation, simulation and experiment code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate design: empirical variance matrix has condition number {condition:.3e}")]
    DegenerateDesign { condition: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numerical degeneracy at transition {step}: {reason}")]
    NumericalDegeneracy { step: usize, reason: String },

    #[error("simulation failure: {0}")]
    SimulationFailure(String),

    #[error("job {replicate} of iterate {iterate} failed after retry: {reason}")]
    JobFailed {
        iterate: u64,
        replicate: u64,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short category label, used by the CLI for exit codes and messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateDesign { .. } => "degenerate-design",
            Error::Resource(_) => "resource",
            Error::NumericalDegeneracy { .. } => "numerical",
            Error::SimulationFailure(_) => "simulation",
            Error::JobFailed { .. } => "simulation",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
