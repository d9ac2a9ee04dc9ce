use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("grid too coarse for a unit-scale partition: {0}")]
    GridTooCoarse(String),

    #[error("unknown cell {0:?}")]
    UnknownCell([i32; 3]),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypotheses violated: {}", .0.join("; "))]
    Hypotheses(Vec<String>),

    #[error("relative energy drift {drift:.3e} exceeds {limit:.1e} after {refinements} refinements")]
    EnergyDrift { drift: f64, limit: f64, refinements: u32 },

    #[error("Picard iteration diverged after {iterations} iterations (contraction factor {factor:.3})")]
    PicardDivergence { iterations: usize, factor: f64 },

    #[error("trajectory: {0}")]
    Trajectory(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
