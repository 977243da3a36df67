use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different spectral boxes")]
    BoxMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("multiplier sample at mode {0} is not finite")]
    NonFiniteMultiplier(usize),
    #[error("field has a nonzero mean; Sobolev norm of negative order is undefined")]
    NonzeroMean,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("eigensolver stopped at residual {residual:.3e} after {iterations} iterations")]
    EigenNoConvergence {
        residual: f64,
        iterations: usize,
        best: Box<crate::solver::EigenPair>,
    },
    #[error("minimization stalled: {0}")]
    SolverStall(String),
    #[error("truncation too small: tail {tail:.3e} exceeds {tol:.3e}")]
    Truncation { tail: f64, tol: f64 },
    #[error("smallness condition fails: 32 pi^3 a C^2 g^2 ||chi_2/|k| ||^2 = {0:.6}")]
    Smallness(f64),
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;
