use thiserror::Error;

use crate::eval::EvalError;
use crate::fem::FemError;
use crate::mesh::MeshError;
use crate::nn::NnError;
use crate::sampling::SamplingError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// True when the failure comes from bad input (files, configuration,
    /// parameters) rather than from a numerical or runtime problem.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Mesh(_) | Error::Config(_) => true,
            Error::Fem(e) => e.is_validation(),
            Error::Sampling(e) => e.is_validation(),
            Error::Nn(e) => e.is_validation(),
            Error::Eval(e) => e.is_validation(),
            Error::Io { .. } => false,
        }
    }
}
