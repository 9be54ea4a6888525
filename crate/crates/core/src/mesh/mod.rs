//! Tetrahedral meshes with vertex roles.
//!
//! A [`TetMesh`] is immutable once built: the constructor checks every
//! invariant (index ranges, positive orientation, disjoint roles) so the rest
//! of the crate can index freely.

mod blob;
mod io;
mod rpp;
mod surface;

pub use blob::{generate_blob, BlobRegion, BlobSpec, NearestSelector};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use rpp::{generate_rpp, LatticeBox, RppRegion, RppSpec};
pub use surface::{boundary_faces, region_normal, vertex_normals, BoundaryFace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("index out of range: {what} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { what: String, index: usize, count: usize },
    #[error("non-positive volume: tet {tet} {vertices:?} has signed volume {volume:e}")]
    NonPositiveVolume { tet: usize, vertices: [usize; 4], volume: f64 },
    #[error("role overlap: fixed vertex {vertex} is also listed in {role}")]
    RoleOverlap { vertex: usize, role: String },
    #[error("duplicate vertex {vertex} in {role}")]
    DuplicateVertex { vertex: usize, role: String },
    #[error("duplicate contact region name {0:?}")]
    DuplicateRegion(String),
    #[error("contact region {0:?} is empty")]
    EmptyRegion(String),
    #[error("invalid region name {0:?}: names must be non-empty and contain no whitespace")]
    InvalidRegionName(String),
    #[error("unknown contact region {0:?}")]
    UnknownRegion(String),
    #[error("{what} {length} is not an integer multiple of the spacing {spacing}")]
    NonDivisible { what: &'static str, length: f64, spacing: f64 },
    #[error("lattice coordinate {coord:?} outside lattice of {dims:?} points")]
    LatticeOutOfRange { coord: [usize; 3], dims: [usize; 3] },
    #[error("degenerate boundary face {face:?} (zero area)")]
    DegenerateFace { face: [usize; 3] },
    #[error("face {face:?} is shared by more than two tets")]
    NonManifoldFace { face: [usize; 3] },
    #[error("surface normal undefined at vertex {vertex}")]
    UndefinedNormal { vertex: usize },
    #[error("mesh has no boundary vertex in region {0:?}")]
    NoBoundaryVertex(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
}

/// Millimetres per simulation unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConvention {
    pub mm_per_unit: f64,
}

impl Default for ScaleConvention {
    fn default() -> Self {
        // 256 mm of real space is one simulation unit.
        Self { mm_per_unit: 256.0 }
    }
}

impl ScaleConvention {
    pub fn new(mm_per_unit: f64) -> Result<Self, MeshError> {
        if !(mm_per_unit > 0.0 && mm_per_unit.is_finite()) {
            return Err(MeshError::InvalidParameter(format!("mm_per_unit must be positive, got {mm_per_unit}")));
        }
        Ok(Self { mm_per_unit })
    }

    pub fn to_mm(&self, units: f64) -> f64 {
        units * self.mm_per_unit
    }

    pub fn to_units(&self, mm: f64) -> f64 {
        mm / self.mm_per_unit
    }
}

/// Named group of vertices moved together by a forced displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactRegion {
    pub name: String,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    fixed_ids: Vec<usize>,
    contact_regions: Vec<ContactRegion>,
    observation_ids: Vec<usize>,
    /// vertex -> index among free vertices
    free_index: Vec<Option<usize>>,
    free_vertices: Vec<usize>,
}

/// Signed volume of the tetrahedron `(a, b, c, d)`; positive when
/// `(b - a, c - a, d - a)` is right-handed.
pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

impl TetMesh {
    /// Builds a mesh, validating every invariant.
    ///
    /// `fixed_ids` and contact-region members are treated as sets (sorted on
    /// construction); `observation_ids` keeps its order since it defines the
    /// network input layout.
    pub fn new(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        mut fixed_ids: Vec<usize>,
        contact_regions: Vec<ContactRegion>,
        observation_ids: Vec<usize>,
    ) -> Result<Self, MeshError> {
        let count = vertices.len();
        if let Some((i, _)) = vertices.iter().enumerate().find(|(_, v)| !v.iter().all(|c| c.is_finite())) {
            return Err(MeshError::InvalidParameter(format!("vertex {i} has a non-finite coordinate")));
        }
        let check = |what: String, index: usize| -> Result<(), MeshError> {
            if index >= count {
                Err(MeshError::IndexOutOfRange { what, index, count })
            } else {
                Ok(())
            }
        };
        for (t, tet) in tets.iter().enumerate() {
            for &i in tet {
                check(format!("tet {t}"), i)?;
            }
        }
        for &i in &fixed_ids {
            check("fixed set".into(), i)?;
        }
        fixed_ids.sort_unstable();
        if let Some(w) = fixed_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(MeshError::DuplicateVertex { vertex: w[0], role: "fixed set".into() });
        }

        let mut regions = Vec::with_capacity(contact_regions.len());
        for mut region in contact_regions {
            if region.name.is_empty() || region.name.chars().any(char::is_whitespace) {
                return Err(MeshError::InvalidRegionName(region.name));
            }
            if regions.iter().any(|r: &ContactRegion| r.name == region.name) {
                return Err(MeshError::DuplicateRegion(region.name));
            }
            if region.vertices.is_empty() {
                return Err(MeshError::EmptyRegion(region.name));
            }
            let role = format!("region {}", region.name);
            for &i in &region.vertices {
                check(role.clone(), i)?;
            }
            region.vertices.sort_unstable();
            if let Some(w) = region.vertices.windows(2).find(|w| w[0] == w[1]) {
                return Err(MeshError::DuplicateVertex { vertex: w[0], role });
            }
            if let Some(&v) = region.vertices.iter().find(|v| fixed_ids.binary_search(v).is_ok()) {
                return Err(MeshError::RoleOverlap { vertex: v, role });
            }
            regions.push(region);
        }

        for &i in &observation_ids {
            check("observation list".into(), i)?;
            if fixed_ids.binary_search(&i).is_ok() {
                return Err(MeshError::RoleOverlap { vertex: i, role: "observation list".into() });
            }
        }
        let mut seen = observation_ids.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(MeshError::DuplicateVertex { vertex: w[0], role: "observation list".into() });
        }

        for (t, tet) in tets.iter().enumerate() {
            let [a, b, c, d] = tet.map(|i| vertices[i]);
            let volume = signed_volume(&a, &b, &c, &d);
            if !(volume > 0.0) {
                return Err(MeshError::NonPositiveVolume { tet: t, vertices: *tet, volume });
            }
        }

        let mut free_index = vec![None; count];
        let mut free_vertices = Vec::with_capacity(count - fixed_ids.len());
        for (v, slot) in free_index.iter_mut().enumerate() {
            if fixed_ids.binary_search(&v).is_err() {
                *slot = Some(free_vertices.len());
                free_vertices.push(v);
            }
        }

        Ok(Self { vertices, tets, fixed_ids, contact_regions: regions, observation_ids, free_index, free_vertices })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn fixed_ids(&self) -> &[usize] {
        &self.fixed_ids
    }

    pub fn contact_regions(&self) -> &[ContactRegion] {
        &self.contact_regions
    }

    pub fn observation_ids(&self) -> &[usize] {
        &self.observation_ids
    }

    /// `N_a`, the total vertex count.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// `N`, the number of vertices excluding fixed points.
    pub fn free_count(&self) -> usize {
        self.free_vertices.len()
    }

    /// Free vertices in ascending index order; position `i` of this list is
    /// the free index used by displacement vectors.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free_vertices
    }

    pub fn free_index(&self, vertex: usize) -> Option<usize> {
        self.free_index.get(vertex).copied().flatten()
    }

    pub fn is_fixed(&self, vertex: usize) -> bool {
        self.fixed_ids.binary_search(&vertex).is_ok()
    }

    pub fn region(&self, name: &str) -> Result<&ContactRegion, MeshError> {
        self.contact_regions.iter().find(|r| r.name == name).ok_or_else(|| MeshError::UnknownRegion(name.to_string()))
    }

    /// Free indices of the observation vertices, in observation order.
    pub fn observation_free_indices(&self) -> Vec<usize> {
        self.observation_ids.iter().map(|&v| self.free_index(v).expect("observation vertices are free")).collect()
    }

    pub fn centroid(&self, ids: &[usize]) -> Vec3 {
        let sum: Vec3 = ids.iter().map(|&i| self.vertices[i]).sum();
        sum / ids.len().max(1) as f64
    }

    pub fn tet_volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.tets[tet].map(|i| self.vertices[i]);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// Largest distance between any two vertices.
    pub fn longest_diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    /// SHA-256 of the canonical text serialization; identifies the mesh in
    /// datasets and models.
    pub fn content_hash(&self) -> String {
        crate::hash::sha256_hex(io::to_text(self).as_bytes())
    }

    /// Same geometry with roles replaced (roles are re-validated).
    pub fn with_roles(
        &self,
        fixed_ids: Vec<usize>,
        contact_regions: Vec<ContactRegion>,
        observation_ids: Vec<usize>,
    ) -> Result<Self, MeshError> {
        Self::new(self.vertices.clone(), self.tets.clone(), fixed_ids, contact_regions, observation_ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tet() -> (Vec<Vec3>, Vec<[usize; 4]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
    }

    #[test]
    fn free_indexing_skips_fixed() {
        let (v, t) = unit_tet();
        let m = TetMesh::new(v, t, vec![2, 0], vec![], vec![3]).unwrap();
        assert_eq!(m.fixed_ids(), &[0, 2]);
        assert_eq!(m.free_vertices(), &[1, 3]);
        assert_eq!(m.free_index(3), Some(1));
        assert_eq!(m.free_index(2), None);
        assert_eq!(m.observation_free_indices(), vec![1]);
        assert!((m.total_volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_invariant_violations() {
        let (v, t) = unit_tet();
        let err = TetMesh::new(v.clone(), vec![[0, 1, 2, 4]], vec![], vec![], vec![]).unwrap_err();
        assert!(err.to_string().contains("index out of range"));
        let err = TetMesh::new(v.clone(), vec![[0, 2, 1, 3]], vec![], vec![], vec![]).unwrap_err();
        assert!(err.to_string().contains("non-positive volume"));
        let region = ContactRegion { name: "a".into(), vertices: vec![1] };
        let err = TetMesh::new(v.clone(), t.clone(), vec![1], vec![region], vec![]).unwrap_err();
        assert!(matches!(err, MeshError::RoleOverlap { vertex: 1, .. }));
        let err = TetMesh::new(v.clone(), t.clone(), vec![0], vec![], vec![0]).unwrap_err();
        assert!(matches!(err, MeshError::RoleOverlap { vertex: 0, .. }));
        let err = TetMesh::new(v.clone(), t.clone(), vec![], vec![], vec![1, 1]).unwrap_err();
        assert!(matches!(err, MeshError::DuplicateVertex { .. }));
        let bad = ContactRegion { name: "two words".into(), vertices: vec![1] };
        assert!(TetMesh::new(v, t, vec![], vec![bad], vec![]).is_err());
    }

    #[test]
    fn scale_round_trip() {
        let s = ScaleConvention::default();
        assert_eq!(s.to_mm(1.0), 256.0);
        assert_eq!(s.to_units(25.6), 0.1);
        assert!(ScaleConvention::new(0.0).is_err());
    }
}
