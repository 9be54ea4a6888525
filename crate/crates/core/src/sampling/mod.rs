//! Target-displacement sampling and deformation datasets.
//!
//! Each contact region gets a set of target points around its centroid,
//! either an axis-aligned box grid or a lattice clipped to a spheroid whose
//! axis points from the fixed-vertex centroid to the contact centroid. Every
//! target is turned into one [`DeformationSample`] by running [`crate::fem::deform`].

mod dataset;
mod io;
mod lattice;
mod plan;

pub use dataset::{build_dataset, BuildReport, Dataset, DeformationSample, RegionInfo, SampleFailure};
pub use io::{decode_dataset, encode_dataset, load_dataset, save_dataset, write_csv, DATASET_MAGIC};
pub use lattice::{ellipsoid_points, frame_from_axis, grid_points};
pub use plan::{
    resolve_plan, NormalChoice, ReferenceLength, RegionSampling, ResolvedRegion, SamplingMode, SamplingSpec,
};

use thiserror::Error;

use crate::fem::FemError;
use crate::mesh::MeshError;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("extent {extent} is not an integer multiple of the spacing {spacing}")]
    NonDivisible { extent: f64, spacing: f64 },
    #[error("invalid sampling spec: {0}")]
    InvalidSpec(String),
    #[error("zero-length fixed-to-contact direction for region {0:?}")]
    ZeroDirection(String),
    #[error("dataset has no successful samples ({failures} failed)")]
    EmptyDataset { failures: usize },
    #[error("dataset parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("mesh hash mismatch: dataset was built from {expected}, got {found}")]
    MeshHashMismatch { expected: String, found: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

impl SamplingError {
    pub fn is_validation(&self) -> bool {
        match self {
            SamplingError::Fem(e) => e.is_validation(),
            SamplingError::EmptyDataset { .. } => false,
            _ => true,
        }
    }
}
