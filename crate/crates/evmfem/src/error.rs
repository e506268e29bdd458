use thiserror::Error;

/// Errors produced by mesh construction, assembly, solvers and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("solver setup error: {0}")]
    SolverSetup(String),

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverConvergence { residual: f64, iterations: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit code for the CLI: configuration-type problems map to 1,
    /// solver failures to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverConvergence { .. } | Error::SolverSetup(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
