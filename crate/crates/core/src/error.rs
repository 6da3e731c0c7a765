use thiserror::Error;

/// Errors produced by grid construction, field operations, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inverse transform left a non-real residue ({0:.3e} relative); operator chain is broken")]
    ComplexResidue(f64),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("vf3 format error at byte {offset}: {message}")]
    Vf3 { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
