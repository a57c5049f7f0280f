//! Evolutionary causal matrices, population states and their evolution.

mod matrix;
mod model;
mod monte_carlo;
mod state;
mod stationary;

pub use matrix::{validate_ecm, EcmMatrix, DEFAULT_COLUMN_SUM_TOLERANCE};
pub use model::{SimulationModel, Trajectory};
pub use monte_carlo::{monte_carlo_all, monte_carlo_evolve};
pub use state::StateVector;
pub use stationary::{
    closed_class_count, stationary_distribution, NoConvergence, DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EcmError {
    #[error("EmptyMatrix: a matrix needs at least one status")]
    EmptyMatrix,
    #[error("NonSquare: row {row} has {len} entries, expected {rows}")]
    NonSquare { rows: usize, row: usize, len: usize },
    #[error("NegativeEntry: ({row},{col}) = {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("NonFiniteEntry: ({row},{col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("InvalidCount: count {index} = {value} must be finite and >= 0")]
    InvalidCount { index: usize, value: f64 },
    #[error("DimensionMismatch: expected size {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ZeroPopulation: total population must be positive")]
    ZeroPopulation,
    #[error("UnknownConditionLabel: {0}")]
    UnknownConditionLabel(String),
    #[error("DuplicateCondition: {0}")]
    DuplicateCondition(String),
    #[error("LengthMismatch: expected length {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("NotConservative: columns of {0} do not sum to 1")]
    NotConservative(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(NoConvergence),
    #[error("ThreadPool: {0}")]
    ThreadPool(String),
}
