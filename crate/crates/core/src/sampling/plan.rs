use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ellipsoid_points, grid_points, SamplingError};
use crate::mesh::{region_normal, TetMesh};
use crate::Vec3;

/// Shape of the target set, in simulation units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    BoxGrid { extents: [f64; 3] },
    Ellipsoid { r_para: f64, r_perp: f64 },
}

/// Concrete sampling geometry for one region (absolute lengths).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub mode: SamplingMode,
    pub spacing: f64,
    /// Unit vector; when set only offsets with a positive dot product survive.
    pub normal_filter: Option<Vec3>,
    /// The length `l` the relative radii were scaled by (informational for box grids).
    pub reference_length: f64,
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(SamplingError::InvalidSpec(format!("spacing must be positive, got {}", self.spacing)));
        }
        match self.mode {
            SamplingMode::BoxGrid { extents } => {
                if extents.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                    return Err(SamplingError::InvalidSpec(format!("box extents must be non-negative: {extents:?}")));
                }
            }
            SamplingMode::Ellipsoid { r_para, r_perp } => {
                if !(r_para > 0.0 && r_perp > 0.0 && r_para.is_finite() && r_perp.is_finite()) {
                    return Err(SamplingError::InvalidSpec(format!(
                        "ellipsoid radii must be positive: ({r_para}, {r_perp})"
                    )));
                }
            }
        }
        if let Some(n) = &self.normal_filter {
            if (n.norm() - 1.0).abs() > 1e-9 {
                return Err(SamplingError::InvalidSpec(format!(
                    "normal filter must be a unit vector, |n| = {}",
                    n.norm()
                )));
            }
        }
        Ok(())
    }
}

/// How `l` is measured for ellipsoid sampling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceLength {
    /// Distance from the fixed-vertex centroid to the contact centroid.
    #[default]
    FixedToContact,
    /// Largest vertex-to-vertex distance of the mesh.
    LongestDiameter,
    Value(f64),
}

/// Which direction the acute-angle filter uses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalChoice {
    /// Averaged outward surface normal over the region's boundary vertices.
    #[default]
    Surface,
    None,
    /// Explicit direction (normalized on use), e.g. to pull a back-side
    /// region toward the front.
    Direction([f64; 3]),
}

/// Declarative per-region sampling plan. Box lengths are simulation units;
/// ellipsoid radii and spacing are fractions of the reference length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RegionSampling {
    Box {
        region: String,
        extents: [f64; 3],
        spacing: f64,
    },
    Ellipsoid {
        region: String,
        r_para: f64,
        r_perp: f64,
        spacing: f64,
        #[serde(default)]
        reference: ReferenceLength,
        #[serde(default)]
        normal: NormalChoice,
    },
}

impl RegionSampling {
    pub fn region(&self) -> &str {
        match self {
            RegionSampling::Box { region, .. } | RegionSampling::Ellipsoid { region, .. } => region,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRegion {
    pub region: String,
    pub spec: SamplingSpec,
    pub centroid: Vec3,
    /// Fixed-centroid to contact-centroid vector (zero when there are no fixed vertices).
    pub v_fc: Vec3,
}

impl ResolvedRegion {
    pub fn points(&self) -> Result<Vec<Vec3>, SamplingError> {
        match self.spec.mode {
            SamplingMode::BoxGrid { extents } => grid_points(&self.centroid, &extents, self.spec.spacing),
            SamplingMode::Ellipsoid { .. } => {
                ellipsoid_points(&self.spec, &self.centroid, &self.v_fc).map_err(|e| match e {
                    SamplingError::ZeroDirection(_) => SamplingError::ZeroDirection(self.region.clone()),
                    other => other,
                })
            }
        }
    }

    /// Target displacements (`point - centroid`) in generation order.
    pub fn targets(&self) -> Result<Vec<Vec3>, SamplingError> {
        Ok(self.points()?.into_iter().map(|p| p - self.centroid).collect())
    }
}

/// Turns a plan into absolute geometry on `mesh`. `normals` are the mesh's
/// vertex normals (only consulted for [`NormalChoice::Surface`]).
pub fn resolve_plan(
    mesh: &TetMesh,
    plan: &RegionSampling,
    normals: &BTreeMap<usize, Vec3>,
) -> Result<ResolvedRegion, SamplingError> {
    let region = mesh.region(plan.region())?;
    let centroid = mesh.centroid(&region.vertices);
    let v_fc = if mesh.fixed_ids().is_empty() { Vec3::zeros() } else { centroid - mesh.centroid(mesh.fixed_ids()) };
    let spec = match plan {
        RegionSampling::Box { extents, spacing, .. } => SamplingSpec {
            mode: SamplingMode::BoxGrid { extents: *extents },
            spacing: *spacing,
            normal_filter: None,
            reference_length: v_fc.norm(),
        },
        RegionSampling::Ellipsoid { r_para, r_perp, spacing, reference, normal, .. } => {
            let l = match reference {
                ReferenceLength::FixedToContact => v_fc.norm(),
                ReferenceLength::LongestDiameter => mesh.longest_diameter(),
                ReferenceLength::Value(v) => *v,
            };
            if !(l > 0.0) {
                return Err(SamplingError::ZeroDirection(region.name.clone()));
            }
            let normal_filter = match normal {
                NormalChoice::None => None,
                NormalChoice::Surface => Some(region_normal(mesh, normals, &region.name)?),
                NormalChoice::Direction(d) => {
                    let d = Vec3::from(*d);
                    if !(d.norm() > 0.0) {
                        return Err(SamplingError::InvalidSpec("zero normal override".into()));
                    }
                    Some(d.normalize())
                }
            };
            SamplingSpec {
                mode: SamplingMode::Ellipsoid { r_para: r_para * l, r_perp: r_perp * l },
                spacing: spacing * l,
                normal_filter,
                reference_length: l,
            }
        }
    };
    spec.validate()?;
    Ok(ResolvedRegion { region: region.name.clone(), spec, centroid, v_fc })
}
