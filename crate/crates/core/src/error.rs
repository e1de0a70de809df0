use crate::lp::SolverStatus;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient pilot tones: {available} available, {requested} requested")]
    InsufficientTones { available: usize, requested: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("capacity exceeded: {requested} requested, at most {capacity} supported")]
    CapacityExceeded { requested: u128, capacity: u128 },

    #[error("energy densities do not cross on (1, 1 + gP) for gP = {pathloss_power}")]
    NoThresholdRoot { pathloss_power: f64 },

    #[error("no threshold meets the error-probability cap {cap}")]
    NoQualifiedThreshold { cap: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("selected columns are numerically dependent (rank {rank} of {columns})")]
    RankDeficient { rank: usize, columns: usize },

    #[error("singular least-squares system")]
    SingularSystem,

    #[error("linear program not solved: {0:?}")]
    Solver(SolverStatus),

    #[error("true channel is identically zero")]
    ZeroChannel,

    #[error("malformed codebook text at line {line}: {reason}")]
    CodebookFormat { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
