//! Deformation estimation of elastic objects from a few observed points.
//!
//! The crate has two halves that meet at the [`sampling::Dataset`] type:
//!
//! - Data generation. A tetrahedral [`mesh::TetMesh`] is deformed by an
//!   incremental finite-element solver ([`fem`]) under forced displacement of
//!   a contact region. [`sampling`] enumerates target displacements (box grids
//!   or normal-filtered ellipsoids) and records the resulting displacement of
//!   every free vertex.
//! - Estimation. A two-hidden-layer ReLU network ([`nn`]) is trained with Adam
//!   to map the displacement of the observation vertices to the displacement
//!   of all free vertices. [`eval`] runs repeated k-fold cross-validation and
//!   reports errors in millimetres.
//!
//! [`config`] ties everything together as a declarative pipeline description
//! with a handful of built-in profiles.
//!
//! Lengths are stored in simulation units throughout; see
//! [`mesh::ScaleConvention`] for the conversion used at reporting boundaries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod fem;
pub mod hash;
pub mod linalg;
pub mod mesh;
pub mod nn;
pub mod sampling;

pub use error::{Error, Result};

pub use eval::{kfold, run_session, FoldPlan, SessionConfig, SessionReport};
pub use fem::{deform, DeformResult, MaterialParams};
pub use mesh::{ScaleConvention, TetMesh};
pub use nn::{MlpModel, TrainConfig};
pub use sampling::{build_dataset, Dataset, DeformationSample, SamplingSpec};

/// Three-component vector used for positions and displacements.
pub type Vec3 = nalgebra::Vector3<f64>;
