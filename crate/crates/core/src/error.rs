//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("covariance is not symmetric positive semidefinite")]
    InvalidCovariance,
    #[error("singular covariance")]
    SingularCovariance,
    #[error("singular innovation covariance")]
    SingularInnovation,
    #[error("block {start}..{end} out of range for dimension {dim}")]
    BlockOutOfRange {
        start: usize,
        end: usize,
        dim: usize,
    },
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(&'static str),
    #[error("incompatible measurement/trajectory pairing (mu={mu}, tau={tau})")]
    IncompatiblePairing { mu: u8, tau: u8 },
    #[error("no feasible assignment exists")]
    InfeasibleAssignment,
    #[error("measurement is not within the gate of any Poisson component")]
    NoGatedComponent,
    #[error("all global hypotheses were pruned; posterior is empty")]
    EmptyPosterior,
    #[error("empty series")]
    EmptySeries,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
