//! Irregular organ-like test meshes.
//!
//! Cells of a regular lattice are kept when their centre lies inside a
//! tapered ellipsoid, the largest face-connected component is retained, and
//! vertices are jittered by a seeded uniform perturbation. The result has an
//! irregular boundary and non-uniform elements while staying valid, which is
//! what the solver and sampler need when no segmented organ mesh is at hand.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{vertex_normals, ContactRegion, MeshError, TetMesh};
use crate::Vec3;

/// Picks the `count` vertices closest to `point` (ties broken by index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestSelector {
    pub point: [f64; 3],
    pub count: usize,
    #[serde(default)]
    pub surface_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRegion {
    pub name: String,
    #[serde(flatten)]
    pub select: NearestSelector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    /// Semi-axes of the ellipsoid, simulation units.
    pub radii: [f64; 3],
    pub spacing: f64,
    /// Cross-section growth along +x: the y semi-axis at `x` is
    /// `radii[1] * (1 + taper * x / radii[0])`.
    #[serde(default)]
    pub taper: f64,
    /// Per-axis jitter amplitude as a fraction of `spacing` (below 0.2).
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    pub fixed: NearestSelector,
    pub regions: Vec<BlobRegion>,
    /// Each point selects the nearest free surface vertex not already chosen.
    pub observation: Vec<[f64; 3]>,
}

const PERMUTATIONS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([0, 2, 1], true),
    ([1, 0, 2], true),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([2, 1, 0], true),
];

fn inside(spec: &BlobSpec, p: &Vec3) -> bool {
    let [a, b, c] = spec.radii;
    let by = b * (1.0 + spec.taper * p.x / a);
    by > 0.0 && (p.x / a).powi(2) + (p.y / by).powi(2) + (p.z / c).powi(2) <= 1.0
}

pub fn generate_blob(spec: &BlobSpec) -> Result<TetMesh, MeshError> {
    let h = spec.spacing;
    if !(h > 0.0) || spec.radii.iter().any(|&r| !(r > 0.0)) {
        return Err(MeshError::InvalidParameter("blob radii and spacing must be positive".into()));
    }
    if !(0.0..0.2).contains(&spec.jitter) {
        return Err(MeshError::InvalidParameter(format!("jitter {} outside [0, 0.2)", spec.jitter)));
    }
    let ymax = spec.radii[1] * (1.0 + spec.taper.abs());
    let half = [spec.radii[0], ymax, spec.radii[2]];
    let cells: [usize; 3] = std::array::from_fn(|a| (2.0 * half[a] / h).ceil() as usize + 1);
    let origin = Vec3::from_fn(|a, _| -(cells[a] as f64) * h / 2.0);
    let cell_id = |c: [usize; 3]| (c[0] * cells[1] + c[1]) * cells[2] + c[2];

    let mut keep = vec![false; cells.iter().product()];
    for cx in 0..cells[0] {
        for cy in 0..cells[1] {
            for cz in 0..cells[2] {
                let centre = origin + Vec3::new(cx as f64 + 0.5, cy as f64 + 0.5, cz as f64 + 0.5) * h;
                keep[cell_id([cx, cy, cz])] = inside(spec, &centre);
            }
        }
    }

    // Largest face-connected component of kept cells.
    let mut label = vec![usize::MAX; keep.len()];
    let mut best = (0usize, usize::MAX);
    for start in 0..keep.len() {
        if !keep[start] || label[start] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        label[start] = start;
        while let Some(c) = queue.pop_front() {
            size += 1;
            let (cx, rest) = (c / (cells[1] * cells[2]), c % (cells[1] * cells[2]));
            let (cy, cz) = (rest / cells[2], rest % cells[2]);
            let p = [cx as isize, cy as isize, cz as isize];
            for axis in 0..3 {
                for delta in [-1isize, 1] {
                    let mut q = p;
                    q[axis] += delta;
                    if (0..3).any(|a| q[a] < 0 || q[a] >= cells[a] as isize) {
                        continue;
                    }
                    let n = cell_id(q.map(|x| x as usize));
                    if keep[n] && label[n] == usize::MAX {
                        label[n] = start;
                        queue.push_back(n);
                    }
                }
            }
        }
        if size > best.0 {
            best = (size, start);
        }
    }
    if best.0 == 0 {
        return Err(MeshError::InvalidParameter("blob spacing too coarse: no cell inside".into()));
    }

    let dims = cells.map(|c| c + 1);
    let lattice_id = |p: [usize; 3]| (p[0] * dims[1] + p[1]) * dims[2] + p[2];
    let mut raw_tets = Vec::new();
    for cx in 0..cells[0] {
        for cy in 0..cells[1] {
            for cz in 0..cells[2] {
                if label[cell_id([cx, cy, cz])] != best.1 {
                    continue;
                }
                for (perm, odd) in PERMUTATIONS {
                    let mut path = [[cx, cy, cz]; 4];
                    for step in 0..3 {
                        path[step + 1] = path[step];
                        path[step + 1][perm[step]] += 1;
                    }
                    let mut tet = path.map(lattice_id);
                    if odd {
                        tet.swap(1, 2);
                    }
                    raw_tets.push(tet);
                }
            }
        }
    }
    let used: BTreeSet<usize> = raw_tets.iter().flatten().copied().collect();
    let mut renumber = vec![usize::MAX; dims.iter().product()];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vertices = Vec::with_capacity(used.len());
    for &lid in &used {
        renumber[lid] = vertices.len();
        let (ix, rest) = (lid / (dims[1] * dims[2]), lid % (dims[1] * dims[2]));
        let (iy, iz) = (rest / dims[2], rest % dims[2]);
        let mut p = origin + Vec3::new(ix as f64, iy as f64, iz as f64) * h;
        if spec.jitter > 0.0 {
            for a in 0..3 {
                p[a] += rng.random_range(-spec.jitter..spec.jitter) * h;
            }
        }
        vertices.push(p);
    }
    let tets: Vec<[usize; 4]> = raw_tets.iter().map(|t| t.map(|i| renumber[i])).collect();

    // Roles are chosen on the bare geometry first.
    let geometry = TetMesh::new(vertices.clone(), tets.clone(), vec![], vec![], vec![])?;
    let surface: BTreeSet<usize> = vertex_normals(&geometry)?.into_keys().collect();
    let nearest = |sel: &NearestSelector, exclude: &BTreeSet<usize>| -> Vec<usize> {
        let target = Vec3::from(sel.point);
        let mut cand: Vec<(f64, usize)> = (0..vertices.len())
            .filter(|v| !exclude.contains(v) && (!sel.surface_only || surface.contains(v)))
            .map(|v| ((vertices[v] - target).norm(), v))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.into_iter().take(sel.count).map(|(_, v)| v).collect()
    };

    let fixed = nearest(&spec.fixed, &BTreeSet::new());
    let fixed_set: BTreeSet<usize> = fixed.iter().copied().collect();
    let regions = spec
        .regions
        .iter()
        .map(|r| ContactRegion { name: r.name.clone(), vertices: nearest(&r.select, &fixed_set) })
        .collect();
    let mut taken = fixed_set.clone();
    let mut observation = Vec::with_capacity(spec.observation.len());
    for &p in &spec.observation {
        let sel = NearestSelector { point: p, count: 1, surface_only: true };
        let v = *nearest(&sel, &taken)
            .first()
            .ok_or_else(|| MeshError::InvalidParameter("not enough surface vertices for observation points".into()))?;
        taken.insert(v);
        observation.push(v);
    }

    TetMesh::new(vertices, tets, fixed, regions, observation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn liver_like() -> BlobSpec {
        BlobSpec {
            radii: [0.43, 0.22, 0.16],
            spacing: 0.07,
            taper: 0.4,
            jitter: 0.1,
            seed: 3,
            fixed: NearestSelector { point: [0.0, 0.0, -0.1], count: 12, surface_only: false },
            regions: vec![BlobRegion {
                name: "front".into(),
                select: NearestSelector { point: [0.4, 0.0, 0.2], count: 4, surface_only: true },
            }],
            observation: vec![[-0.4, 0.0, 0.0], [0.2, 0.3, 0.0], [0.2, -0.3, 0.1]],
        }
    }

    #[test]
    fn blob_is_valid_and_deterministic() {
        let a = generate_blob(&liver_like()).unwrap();
        let b = generate_blob(&liver_like()).unwrap();
        assert_eq!(a, b);
        assert!(a.vertex_count() > 100);
        assert_eq!(a.fixed_ids().len(), 12);
        assert_eq!(a.observation_ids().len(), 3);
        assert_eq!(a.contact_regions()[0].vertices.len(), 4);
    }

    #[test]
    fn rejects_large_jitter() {
        let mut spec = liver_like();
        spec.jitter = 0.3;
        assert!(generate_blob(&spec).is_err());
    }
}
