use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid document: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "defender pair (A, Bd) is not controllable: Kalman rank {rank} of {n}, \
         {unreachable}-dimensional unreachable subspace"
    )]
    Uncontrollable { rank: usize, n: usize, unreachable: usize },

    #[error("system matrix is not stable (spectral abscissa {0:e})")]
    Unstable(f64),

    #[error("target not reachable: {outside:.3e} of the displacement lies outside the reachable subspace (extended-inverse energy {energy:.6e})")]
    Unreachable { outside: f64, energy: f64 },

    #[error("Riccati iteration did not converge within {0} iterations")]
    RiccatiNonConvergence(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
