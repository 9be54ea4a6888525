use std::collections::{BTreeMap, HashMap};

use super::{MeshError, TetMesh};
use crate::Vec3;

/// Triangle on the boundary, wound counter-clockwise seen from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub tet: usize,
}

const LOCAL_FACES: [([usize; 3], usize); 4] = [([1, 2, 3], 0), ([0, 2, 3], 1), ([0, 1, 3], 2), ([0, 1, 2], 3)];

/// Faces that belong to exactly one tetrahedron, oriented away from the
/// opposite vertex of their tet. Ordered by (tet, local face).
pub fn boundary_faces(mesh: &TetMesh) -> Result<Vec<BoundaryFace>, MeshError> {
    let mut seen: HashMap<[usize; 3], (usize, usize, usize)> = HashMap::new();
    for (t, tet) in mesh.tets().iter().enumerate() {
        for (local, (face, _)) in LOCAL_FACES.iter().enumerate() {
            let mut key = face.map(|k| tet[k]);
            key.sort_unstable();
            let entry = seen.entry(key).or_insert((0, t, local));
            entry.0 += 1;
            if entry.0 > 2 {
                return Err(MeshError::NonManifoldFace { face: key });
            }
        }
    }
    let mut singles: Vec<(usize, usize)> = seen.values().filter(|(c, _, _)| *c == 1).map(|&(_, t, l)| (t, l)).collect();
    singles.sort_unstable();

    let pos = mesh.vertices();
    Ok(singles
        .into_iter()
        .map(|(t, local)| {
            let tet = mesh.tets()[t];
            let (face, opp) = LOCAL_FACES[local];
            let mut f = face.map(|k| tet[k]);
            let n = (pos[f[1]] - pos[f[0]]).cross(&(pos[f[2]] - pos[f[0]]));
            if n.dot(&(pos[tet[opp]] - pos[f[0]])) > 0.0 {
                f.swap(1, 2);
            }
            BoundaryFace { vertices: f, tet: t }
        })
        .collect())
}

/// Area-weighted outward unit normal at every boundary vertex.
pub fn vertex_normals(mesh: &TetMesh) -> Result<BTreeMap<usize, Vec3>, MeshError> {
    let pos = mesh.vertices();
    let mut acc: BTreeMap<usize, Vec3> = BTreeMap::new();
    for face in boundary_faces(mesh)? {
        let [a, b, c] = face.vertices.map(|i| pos[i]);
        let (e1, e2) = (b - a, c - a);
        // |e1 x e2| is twice the area, so summing raw cross products weights by area.
        let n = e1.cross(&e2);
        if n.norm() <= 1e-12 * (e1.norm_squared() + e2.norm_squared()) {
            return Err(MeshError::DegenerateFace { face: face.vertices });
        }
        for v in face.vertices {
            *acc.entry(v).or_insert_with(Vec3::zeros) += n;
        }
    }
    acc.into_iter()
        .map(|(v, n)| {
            let len = n.norm();
            if len == 0.0 || !len.is_finite() {
                Err(MeshError::UndefinedNormal { vertex: v })
            } else {
                Ok((v, n / len))
            }
        })
        .collect()
}

/// Normalized average of the vertex normals of a contact region's boundary
/// vertices.
pub fn region_normal(mesh: &TetMesh, normals: &BTreeMap<usize, Vec3>, region: &str) -> Result<Vec3, MeshError> {
    let r = mesh.region(region)?;
    let sum: Vec3 = r.vertices.iter().filter_map(|v| normals.get(v)).sum();
    let len = sum.norm();
    if len == 0.0 {
        return Err(MeshError::NoBoundaryVertex(region.to_string()));
    }
    Ok(sum / len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rpp, RppSpec};

    fn block(long: f64, short: f64, h: f64) -> TetMesh {
        generate_rpp(&RppSpec {
            long_side: long,
            short_side: short,
            spacing: h,
            fixed: vec![],
            regions: vec![],
            observation: vec![],
        })
        .unwrap()
    }

    #[test]
    fn flat_face_vertex_gets_face_normal() {
        let m = block(1.0, 0.2, 0.1);
        let normals = vertex_normals(&m).unwrap();
        // ix = 5, iy = 1, iz = 2: middle of the top (z = max) face.
        let v = (5 * 3 + 1) * 3 + 2;
        let n = normals[&v];
        assert!((n - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        // the centre vertex of a 3x3x3 lattice is interior
        let m2 = block(0.2, 0.2, 0.1);
        assert!(!vertex_normals(&m2).unwrap().contains_key(&13));
    }

    #[test]
    fn cube_corner_on_main_diagonal() {
        let m = block(1.0, 1.0, 1.0);
        let normals = vertex_normals(&m).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((normals[&0] - Vec3::new(-s, -s, -s)).norm() < 1e-15);
        assert!((normals[&7] - Vec3::new(s, s, s)).norm() < 1e-15);
        for n in normals.values() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_faces_point_outward() {
        let m = block(0.4, 0.2, 0.1);
        let centre = m.centroid(&(0..m.vertex_count()).collect::<Vec<_>>());
        let pos = m.vertices();
        for f in boundary_faces(&m).unwrap() {
            let [a, b, c] = f.vertices.map(|i| pos[i]);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&((a + b + c) / 3.0 - centre)) > 0.0);
        }
    }
}
