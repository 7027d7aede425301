//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("register size n = {n} exceeds the dense-simulator limit of {max} qubits")]
    DimensionLimit { n: usize, max: usize },

    #[error("bitstring length {actual} does not match the expected length {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown qubit label {label}")]
    UnknownLabel { label: usize },

    #[error("subspace index out of range: {0}")]
    InvalidSubspace(String),

    #[error("sector m = {m} carries no weight (p = {p:.3e})")]
    EmptySector { m: usize, p: f64 },

    #[error("invalid loss schedule: {0}")]
    InvalidSchedule(String),

    #[error("integration unstable at t = {t}: trace drifted by {drift:.3e}")]
    Instability { t: f64, drift: f64 },

    #[error("at least {required} trials required, table has {actual}")]
    TooFewTrials { required: usize, actual: usize },

    #[error("row {row}, column {col}: invalid entry {token:?} (expected 0, 1 or 0.5)")]
    ParseTable { row: usize, col: usize, token: String },

    #[error("row {row} has {actual} entries, expected {expected}")]
    RaggedTable { row: usize, expected: usize, actual: usize },

    #[error("cannot parse bitstring {0:?}: only '0' and '1' are allowed")]
    ParseBitstring(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
