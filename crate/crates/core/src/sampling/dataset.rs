use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{resolve_plan, RegionSampling, SamplingError};
use crate::fem::{deform, Elasticity};
use crate::mesh::{vertex_normals, ScaleConvention, TetMesh};
use crate::Vec3;

/// One FEM-computed deformation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSample {
    /// Index into [`Dataset::regions`].
    pub region: usize,
    pub target_disp: Vec3,
    /// `3N` free-vertex displacements, vertex-major.
    pub u_all: Vec<f64>,
    /// Total contact forces (`3 N_c`), when kept.
    pub f_c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionInfo {
    pub name: String,
    pub n_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub region: usize,
    pub target_disp: [f64; 3],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mesh_hash: String,
    pub observation_ids: Vec<usize>,
    /// Free indices of the observation vertices (network input slicing).
    pub observation_free: Vec<usize>,
    /// `N`, free vertices per sample.
    pub n_free: usize,
    pub scale: ScaleConvention,
    pub n_steps: usize,
    pub regions: Vec<RegionInfo>,
    pub samples: Vec<DeformationSample>,
    /// Targets whose simulation failed; excluded from `samples`.
    pub failures: Vec<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_obs(&self) -> usize {
        self.observation_free.len()
    }

    /// Network input for a sample: the observation vertices' displacements,
    /// vertex-major in observation order.
    pub fn observation_input(&self, sample: &DeformationSample) -> Vec<f64> {
        self.observation_free.iter().flat_map(|&f| sample.u_all[3 * f..3 * f + 3].iter().copied()).collect()
    }

    /// Largest contact displacement magnitude over all samples (simulation units).
    pub fn max_target_displacement(&self) -> f64 {
        self.samples.iter().map(|s| s.target_disp.norm()).fold(0.0, f64::max)
    }

    pub fn check_mesh(&self, mesh: &TetMesh) -> Result<(), SamplingError> {
        let found = mesh.content_hash();
        if found != self.mesh_hash {
            return Err(SamplingError::MeshHashMismatch { expected: self.mesh_hash.clone(), found });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.samples.is_empty() {
            return Err(SamplingError::EmptyDataset { failures: self.failures.len() });
        }
        let bad = |m: String| Err(SamplingError::InvalidSpec(m));
        if self.observation_free.len() != self.observation_ids.len() {
            return bad("observation lists differ in length".into());
        }
        if let Some(&f) = self.observation_free.iter().find(|&&f| f >= self.n_free) {
            return bad(format!("observation free index {f} out of range"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.region >= self.regions.len() {
                return bad(format!("sample {i} references region {}", s.region));
            }
            if s.u_all.len() != 3 * self.n_free {
                return bad(format!(
                    "sample {i} has {} displacement values, expected {}",
                    s.u_all.len(),
                    3 * self.n_free
                ));
            }
            if let Some(f) = &s.f_c {
                if f.len() != 3 * self.regions[s.region].n_vertices {
                    return bad(format!("sample {i} has a malformed force block"));
                }
            }
        }
        Ok(())
    }
}

/// Runs one deformation per target of every plan, regions in the given order
/// and targets in lattice order. Simulations run on the current rayon pool;
/// the result order does not depend on the number of workers.
pub fn build_dataset(
    mesh: &TetMesh,
    d: &Elasticity,
    plans: &[RegionSampling],
    n_steps: usize,
    scale: ScaleConvention,
    keep_forces: bool,
) -> Result<(Dataset, BuildReport), SamplingError> {
    if n_steps == 0 {
        return Err(SamplingError::Fem(crate::fem::FemError::InvalidSteps));
    }
    let normals = vertex_normals(mesh)?;
    let mut regions = Vec::new();
    let mut jobs: Vec<(usize, String, Vec3)> = Vec::new();
    for plan in plans {
        let resolved = resolve_plan(mesh, plan, &normals)?;
        let region_id = match regions.iter().position(|r: &RegionInfo| r.name == resolved.region) {
            Some(i) => i,
            None => {
                regions.push(RegionInfo {
                    name: resolved.region.clone(),
                    n_vertices: mesh.region(&resolved.region)?.vertices.len(),
                });
                regions.len() - 1
            }
        };
        for t in resolved.targets()? {
            jobs.push((region_id, resolved.region.clone(), t));
        }
    }

    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|(region_id, name, target)| {
            deform(mesh, d, name, target, n_steps).map(|r| DeformationSample {
                region: *region_id,
                target_disp: *target,
                u_all: r.flat_displacements(),
                f_c: keep_forces.then(|| r.flat_forces()),
            })
        })
        .collect();

    let mut samples = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for ((region, _, target), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(s) => samples.push(s),
            Err(e) => {
                log::warn!("sample failed (region {region}, target {:?}): {e}", target.as_slice());
                failures.push(SampleFailure {
                    region: *region,
                    target_disp: [target.x, target.y, target.z],
                    reason: e.to_string(),
                });
            }
        }
    }
    let report = BuildReport { attempted: jobs.len(), succeeded: samples.len(), failed: failures.len() };
    if samples.is_empty() {
        return Err(SamplingError::EmptyDataset { failures: failures.len() });
    }
    let dataset = Dataset {
        mesh_hash: mesh.content_hash(),
        observation_ids: mesh.observation_ids().to_vec(),
        observation_free: mesh.observation_free_indices(),
        n_free: mesh.free_count(),
        scale,
        n_steps,
        regions,
        samples,
        failures,
    };
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{elasticity_matrix, MaterialParams};
    use crate::mesh::{generate_rpp, LatticeBox, RppRegion, RppSpec};

    fn bar() -> TetMesh {
        generate_rpp(&RppSpec {
            long_side: 0.4,
            short_side: 0.1,
            spacing: 0.1,
            fixed: vec![LatticeBox { min: [0, 0, 0], max: [0, 1, 1] }],
            regions: vec![RppRegion { name: "tip".into(), boxes: vec![LatticeBox { min: [4, 0, 0], max: [4, 1, 1] }] }],
            observation: vec![[2, 1, 1], [4, 0, 0]],
        })
        .unwrap()
    }

    #[test]
    fn single_centroid_sample_is_zero() {
        let mesh = bar();
        let d = elasticity_matrix(&MaterialParams::default()).unwrap();
        let plan = RegionSampling::Box { region: "tip".into(), extents: [0.0; 3], spacing: 0.01 };
        let (ds, report) = build_dataset(&mesh, &d, &[plan], 3, ScaleConvention::default(), true).unwrap();
        assert_eq!(report.succeeded, 1);
        assert_eq!(ds.len(), 1);
        assert!(ds.samples[0].u_all.iter().all(|&u| u == 0.0));
        assert_eq!(ds.samples[0].f_c.as_ref().unwrap().len(), 12);
        ds.validate().unwrap();
    }

    #[test]
    fn contact_rows_echo_the_target_and_inputs_slice_u_all() {
        let mesh = bar();
        let d = elasticity_matrix(&MaterialParams::default()).unwrap();
        let plan = RegionSampling::Box { region: "tip".into(), extents: [0.02, 0.02, 0.0], spacing: 0.02 };
        let (ds, _) = build_dataset(&mesh, &d, &[plan], 4, ScaleConvention::default(), false).unwrap();
        assert_eq!(ds.len(), 4);
        let tip = &mesh.region("tip").unwrap().vertices;
        for s in &ds.samples {
            for &v in tip {
                let f = mesh.free_index(v).unwrap();
                for a in 0..3 {
                    assert!((s.u_all[3 * f + a] - s.target_disp[a]).abs() <= 1e-9);
                }
            }
            let x = ds.observation_input(s);
            let f0 = mesh.free_index(mesh.observation_ids()[0]).unwrap();
            assert_eq!(&x[..3], &s.u_all[3 * f0..3 * f0 + 3]);
            // second observation vertex is a tip vertex
            assert_eq!(&x[3..], s.target_disp.as_slice());
        }
        assert!((ds.max_target_displacement() - (0.01f64 * 0.01 * 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unknown_region_is_rejected() {
        let mesh = bar();
        let d = elasticity_matrix(&MaterialParams::default()).unwrap();
        let plan = RegionSampling::Box { region: "nope".into(), extents: [0.0; 3], spacing: 0.01 };
        assert!(build_dataset(&mesh, &d, &[plan], 1, ScaleConvention::default(), false).is_err());
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let mesh = bar();
        let d = elasticity_matrix(&MaterialParams::default()).unwrap();
        // Pushing the tip through the fixed face inverts elements.
        let plan = RegionSampling::Box { region: "tip".into(), extents: [1.0, 0.0, 0.0], spacing: 0.5 };
        let (ds, report) = build_dataset(&mesh, &d, &[plan], 5, ScaleConvention::default(), false).unwrap();
        assert_eq!(report.attempted, 3);
        assert!(report.failed >= 1);
        assert_eq!(ds.failures.len(), report.failed);
        assert_eq!(ds.len(), report.succeeded);
    }
}
