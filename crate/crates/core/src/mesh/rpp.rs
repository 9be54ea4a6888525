//! Rectangular parallelepiped on a regular lattice.
//!
//! The long side runs along x; y and z share the short side. Vertices are
//! numbered with x slowest, `id = (ix * ny + iy) * nz + iz`, so that each
//! x-slab is contiguous. That keeps the stiffness envelope to roughly two
//! slabs wide.
//!
//! Each lattice cube is split into six tetrahedra around its main diagonal
//! (from the `(0,0,0)` corner to the `(1,1,1)` corner), one per ordering of
//! the three axes. Every cube uses the same split, so faces between
//! neighbouring cubes are triangulated identically and the mesh is conforming.

use serde::{Deserialize, Serialize};

use super::{ContactRegion, MeshError, TetMesh};
use crate::Vec3;

/// Inclusive box of lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl LatticeBox {
    pub fn point(p: [usize; 3]) -> Self {
        Self { min: p, max: p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RppRegion {
    pub name: String,
    pub boxes: Vec<LatticeBox>,
}

/// Parameters of [`generate_rpp`]. Lengths are in simulation units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RppSpec {
    pub long_side: f64,
    pub short_side: f64,
    pub spacing: f64,
    pub fixed: Vec<LatticeBox>,
    pub regions: Vec<RppRegion>,
    /// Ordered lattice coordinates of the observation vertices.
    pub observation: Vec<[usize; 3]>,
}

/// Axis orderings for the six tetrahedra of a cube. Even permutations keep
/// the path order; odd ones swap the two middle vertices so every tet has
/// positive volume.
const PERMUTATIONS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([0, 2, 1], true),
    ([1, 0, 2], true),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([2, 1, 0], true),
];

fn lattice_count(what: &'static str, length: f64, spacing: f64) -> Result<usize, MeshError> {
    let ratio = length / spacing;
    let rounded = ratio.round();
    if !(length > 0.0) || rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(MeshError::NonDivisible { what, length, spacing });
    }
    Ok(rounded as usize + 1)
}

pub fn generate_rpp(spec: &RppSpec) -> Result<TetMesh, MeshError> {
    if !(spec.spacing > 0.0 && spec.spacing.is_finite()) {
        return Err(MeshError::InvalidParameter(format!("spacing must be positive, got {}", spec.spacing)));
    }
    let nx = lattice_count("long side", spec.long_side, spec.spacing)?;
    let nyz = lattice_count("short side", spec.short_side, spec.spacing)?;
    let dims = [nx, nyz, nyz];
    let h = spec.spacing;
    let id = |p: [usize; 3]| (p[0] * dims[1] + p[1]) * dims[2] + p[2];

    let mut vertices = Vec::with_capacity(nx * nyz * nyz);
    for ix in 0..nx {
        for iy in 0..nyz {
            for iz in 0..nyz {
                vertices.push(Vec3::new(ix as f64 * h, iy as f64 * h, iz as f64 * h));
            }
        }
    }

    let mut tets = Vec::with_capacity((nx - 1) * (nyz - 1) * (nyz - 1) * 6);
    for ix in 0..nx - 1 {
        for iy in 0..nyz - 1 {
            for iz in 0..nyz - 1 {
                let base = [ix, iy, iz];
                for (perm, odd) in PERMUTATIONS {
                    let mut path = [base; 4];
                    for step in 0..3 {
                        path[step + 1] = path[step];
                        path[step + 1][perm[step]] += 1;
                    }
                    let mut tet = path.map(id);
                    if odd {
                        tet.swap(1, 2);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    let expand = |boxes: &[LatticeBox]| -> Result<Vec<usize>, MeshError> {
        let mut out = Vec::new();
        for b in boxes {
            for p in [b.min, b.max] {
                if (0..3).any(|a| p[a] >= dims[a]) {
                    return Err(MeshError::LatticeOutOfRange { coord: p, dims });
                }
            }
            for ix in b.min[0]..=b.max[0] {
                for iy in b.min[1]..=b.max[1] {
                    for iz in b.min[2]..=b.max[2] {
                        out.push(id([ix, iy, iz]));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    };

    let fixed = expand(&spec.fixed)?;
    let regions = spec
        .regions
        .iter()
        .map(|r| Ok(ContactRegion { name: r.name.clone(), vertices: expand(&r.boxes)? }))
        .collect::<Result<Vec<_>, MeshError>>()?;
    let observation = spec
        .observation
        .iter()
        .map(|&p| {
            if (0..3).any(|a| p[a] >= dims[a]) {
                Err(MeshError::LatticeOutOfRange { coord: p, dims })
            } else {
                Ok(id(p))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    TetMesh::new(vertices, tets, fixed, regions, observation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn bare(long: f64, short: f64, spacing: f64) -> RppSpec {
        RppSpec { long_side: long, short_side: short, spacing, fixed: vec![], regions: vec![], observation: vec![] }
    }

    #[test]
    fn single_cube() {
        let m = generate_rpp(&bare(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.tets().len(), 6);
        assert!((m.total_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_size_block() {
        // 256 x 51.2 x 51.2 mm at 25.6 mm spacing, in simulation units.
        let m = generate_rpp(&bare(1.0, 0.2, 0.1)).unwrap();
        assert_eq!(m.vertex_count(), 99);
        assert_eq!(m.tets().len(), 240);
        let expected = 1.0 * 0.2 * 0.2;
        assert!((m.total_volume() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn faces_are_conforming() {
        let m = generate_rpp(&bare(0.3, 0.2, 0.1)).unwrap();
        let mut count: HashMap<[usize; 3], usize> = HashMap::new();
        for t in m.tets() {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| t[k]).collect();
                f.sort_unstable();
                *count.entry([f[0], f[1], f[2]]).or_default() += 1;
            }
        }
        assert!(count.values().all(|&c| c == 1 || c == 2));
        // Each boundary square is split into two triangles.
        let boundary = count.values().filter(|&&c| c == 1).count();
        let squares = 2 * (3 * 2 + 3 * 2 + 2 * 2);
        assert_eq!(boundary, 2 * squares);
    }

    #[test]
    fn rejects_bad_dimensions_and_roles() {
        assert!(matches!(generate_rpp(&bare(1.0, 0.25, 0.1)), Err(MeshError::NonDivisible { .. })));
        let mut spec = bare(1.0, 0.2, 0.1);
        spec.observation = vec![[11, 0, 0]];
        assert!(matches!(generate_rpp(&spec), Err(MeshError::LatticeOutOfRange { .. })));
    }

    #[test]
    fn roles_follow_lattice_ids() {
        let mut spec = bare(1.0, 0.2, 0.1);
        spec.fixed = vec![LatticeBox { min: [0, 0, 0], max: [0, 2, 2] }];
        spec.observation = vec![[10, 2, 2], [5, 0, 0]];
        let m = generate_rpp(&spec).unwrap();
        assert_eq!(m.fixed_ids(), &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(m.observation_ids(), &[98, 45]);
        assert_eq!(m.free_count(), 90);
    }
}
