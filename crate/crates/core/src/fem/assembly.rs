use nalgebra::DMatrix;

use super::{element_stiffness, Elasticity, FemError};
use crate::mesh::TetMesh;
use crate::Vec3;

/// Vertex to first-DOF mapping after fixed-vertex elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    base: Vec<Option<usize>>,
    n_dofs: usize,
}

impl DofMap {
    /// Free vertices get DOFs `3f, 3f + 1, 3f + 2` for free index `f`.
    pub fn for_mesh(mesh: &TetMesh) -> Self {
        let base = (0..mesh.vertex_count()).map(|v| mesh.free_index(v).map(|f| 3 * f)).collect();
        Self { base, n_dofs: 3 * mesh.free_count() }
    }

    /// Every vertex free, no elimination.
    pub fn unconstrained(vertex_count: usize) -> Self {
        Self { base: (0..vertex_count).map(|v| Some(3 * v)).collect(), n_dofs: 3 * vertex_count }
    }

    pub fn dof(&self, vertex: usize, axis: usize) -> Option<usize> {
        self.base[vertex].map(|b| b + axis)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }
}

/// Global stiffness over the free DOFs.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub k: DMatrix<f64>,
    pub dof_map: DofMap,
}

fn assemble_with(
    mesh: &TetMesh,
    positions: &[Vec3],
    d: &Elasticity,
    dof_map: DofMap,
) -> Result<StiffnessSystem, FemError> {
    if positions.len() != mesh.vertex_count() {
        return Err(FemError::PositionsMismatch { expected: mesh.vertex_count(), found: positions.len() });
    }
    let n = dof_map.n_dofs();
    let mut k = DMatrix::zeros(n, n);
    for (t, tet) in mesh.tets().iter().enumerate() {
        let x = tet.map(|v| positions[v]);
        let ke = element_stiffness(&x, d).map_err(|e| match e {
            FemError::DegenerateElement { volume } => {
                FemError::InvertedElement { tet: t, vertices: *tet, volume, step: None }
            }
            other => other,
        })?;
        let dofs: [Option<usize>; 12] = std::array::from_fn(|i| dof_map.dof(tet[i / 3], i % 3));
        for (i, gi) in dofs.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in dofs.iter().enumerate() {
                if let Some(gj) = *gj {
                    k[(gi, gj)] += ke[(i, j)];
                }
            }
        }
    }
    Ok(StiffnessSystem { k, dof_map })
}

/// Stiffness at `positions` with fixed-vertex rows and columns eliminated.
pub fn assemble(mesh: &TetMesh, positions: &[Vec3], d: &Elasticity) -> Result<StiffnessSystem, FemError> {
    assemble_with(mesh, positions, d, DofMap::for_mesh(mesh))
}

/// Stiffness over all `3 N_a` DOFs, ignoring the fixed set.
pub fn assemble_unconstrained(mesh: &TetMesh, positions: &[Vec3], d: &Elasticity) -> Result<StiffnessSystem, FemError> {
    assemble_with(mesh, positions, d, DofMap::unconstrained(mesh.vertex_count()))
}
