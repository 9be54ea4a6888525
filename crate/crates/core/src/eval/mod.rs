//! Cross-validation, error metrics and report export.
//!
//! Errors are computed in simulation units and reported in millimetres via
//! the dataset's [`ScaleConvention`](crate::mesh::ScaleConvention).
//! Percentages are relative to the largest contact displacement in the
//! dataset.

mod export;
mod folds;
mod metrics;
mod session;

pub use export::{write_curve_csv, write_samples_csv, write_trials_csv, write_vtk};
pub use folds::{kfold, FoldPlan};
pub use metrics::{local_positional_error, rmse, LpeSummary, RmseMode};
pub use session::{
    run_session, ReferenceMetrics, SampleLpe, SessionConfig, SessionReport, TrialPredictions, TrialReport,
};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot split {n} samples into {k} folds (need n >= k >= 2)")]
    InvalidFolds { n: usize, k: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("training failed in repeat {repeat}, fold {fold}: {source}")]
    Training {
        repeat: usize,
        fold: usize,
        #[source]
        source: NnError,
    },
}

impl EvalError {
    pub fn is_validation(&self) -> bool {
        match self {
            EvalError::Training { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}
