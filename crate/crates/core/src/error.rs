use crate::diagnostics::config::ConfigError;
use crate::fem::{LinearSolveFailure, LoadError, MeshError, MeshIoError};
use crate::material::LawsError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error(transparent)]
    LinearSolve(#[from] LinearSolveFailure),
    #[error("line search failed to decrease the energy (residual {residual:e})")]
    LineSearch { residual: f64 },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
    #[error(transparent)]
    Laws(#[from] LawsError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Solver failures are distinguished from bad input in the CLI exit code.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Solver(_))
    }
}

impl From<LinearSolveFailure> for Error {
    fn from(e: LinearSolveFailure) -> Error {
        Error::Solver(SolverError::LinearSolve(e))
    }
}
