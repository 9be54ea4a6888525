//! Two-hidden-layer ReLU network trained with Adam.
//!
//! Each weight matrix carries its bias in column 0, so a layer computes
//! `z = W · [1; a]`. Hidden layers use `g(z) = max(0, z)` with `g'(0) = 0`;
//! the output layer is linear. Inputs are observation-vertex displacements
//! and outputs are free-vertex displacements, both flattened vertex-major
//! with `(x, y, z)` inside each vertex.
//!
//! The cost is the batch mean of `½‖a − y‖²` plus `λ_ℓ / (2 n_ℓ) Σ w²` per
//! layer, where the sum and `n_ℓ` cover the non-bias weights only.

mod adam;
mod artifact;
mod model;
mod train;

pub use adam::{adam_step, alpha_schedule, AdamParams, AdamState};
pub use artifact::{ModelArtifact, MODEL_FORMAT};
pub use model::{cost, cost_and_gradients, ForwardCache, Gradients, MlpModel};
pub use train::{train, TrainConfig, TrainingData, TrainingLog};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    ShapeMismatch { what: String, expected: String, found: String },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training set of {m} samples is smaller than one batch of {batch}")]
    EmptyPartition { m: usize, batch: usize },
    #[error("epoch number must be at least 1, got {0}")]
    InvalidEpoch(usize),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl NnError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, NnError::NonFinite(_))
    }

    pub(crate) fn shape(what: &str, expected: impl ToString, found: impl ToString) -> Self {
        NnError::ShapeMismatch { what: what.into(), expected: expected.to_string(), found: found.to_string() }
    }
}
