use thiserror::Error;

/// Errors raised by model construction, propagation and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coupling matrix is asymmetric: |V[{i}][{j}] - V[{j}][{i}]| = {delta:e}")]
    AsymmetricCoupling { i: usize, j: usize, delta: f64 },
    #[error("coupling diagonal V[{index}][{index}] = {value} must be zero")]
    NonZeroDiagonal { index: usize, value: f64 },
    #[error("negative dephasing rate gamma[{index}] = {value}")]
    NegativeRate { index: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("site {index} has non-positive frequency {value}")]
    NonPositiveFrequency { index: usize, value: f64 },
    #[error("integration step too large: dt * rate = {product:.4} exceeds 0.1 (dt = {dt:e}, rate = {rate:e})")]
    StepTooLarge { dt: f64, rate: f64, product: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error("initial amplitude vector has zero norm")]
    ZeroState,
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("normalization collapsed: trace = {0:e}")]
    NormCollapse(f64),
    #[error("index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),
    #[error("invalid time series: {0}")]
    InvalidSeries(String),
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("validation error: {0}")]
    Validation(Box<Error>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
