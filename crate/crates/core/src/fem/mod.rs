//! Incremental (updated-geometry) linear-elastic finite elements on
//! four-node tetrahedra.
//!
//! Strains use Voigt ordering `(xx, yy, zz, xy, yz, zx)` with engineering
//! shear strains (`γ = 2ε`). [`elasticity_matrix`] and the strain-displacement
//! matrix in [`element`] both follow it.
//!
//! Large deformations are reached by [`deform`]: the prescribed contact
//! displacement is split into equal increments, and each increment is solved
//! with the stiffness assembled at the current (already displaced) geometry.
//! The material matrix never changes.

mod assembly;
mod deform;
mod element;
mod material;
mod solve;

pub use assembly::{assemble, assemble_unconstrained, DofMap, StiffnessSystem};
pub use deform::{deform, DeformResult};
pub use element::{element_stiffness, strain_displacement, ElementStiffness, StrainDisplacement};
pub use material::{elasticity_matrix, Elasticity, MaterialParams};
pub use solve::{solve_forced_displacement, ForcedSolution};

use thiserror::Error;

use crate::linalg::FactorError;
use crate::mesh::MeshError;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("singular material: Poisson's ratio {poisson_ratio} must be below 0.5")]
    SingularMaterial { poisson_ratio: f64 },
    #[error("degenerate element: signed volume {volume:e}")]
    DegenerateElement { volume: f64 },
    #[error("element inverted: tet {tet} {vertices:?} has signed volume {volume:e}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    InvertedElement { tet: usize, vertices: [usize; 4], volume: f64, step: Option<usize> },
    #[error("expected {expected} positions, found {found}")]
    PositionsMismatch { expected: usize, found: usize },
    #[error("invalid contact specification: {0}")]
    InvalidContact(String),
    #[error("singular system: {source}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Singular {
        #[source]
        source: FactorError,
        step: Option<usize>,
    },
    #[error("step count must be at least 1")]
    InvalidSteps,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl FemError {
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            FemError::InvertedElement { .. } | FemError::Singular { .. } | FemError::DegenerateElement { .. }
        )
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            FemError::InvertedElement { tet, vertices, volume, .. } => {
                FemError::InvertedElement { tet, vertices, volume, step: Some(step) }
            }
            FemError::Singular { source, .. } => FemError::Singular { source, step: Some(step) },
            other => other,
        }
    }
}
