use nalgebra::DVector;

use super::solve::solve_partitioned;
use super::{assemble, Elasticity, FemError};
use crate::mesh::{signed_volume, TetMesh};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct DeformResult {
    /// Cumulative displacement of every free vertex, in free-index order.
    pub displacements: Vec<Vec3>,
    /// Total force on each contact vertex (sum of the per-step forces), in
    /// the region's vertex order.
    pub contact_forces: Vec<Vec3>,
    pub steps: usize,
    /// Relative residual `‖K Δu − Δf‖ / ‖Δf‖` of each step's linear solve.
    pub residuals: Vec<f64>,
}

impl DeformResult {
    /// Displacements flattened vertex-major, `(x, y, z)` within a vertex.
    pub fn flat_displacements(&self) -> Vec<f64> {
        self.displacements.iter().flat_map(|u| [u.x, u.y, u.z]).collect()
    }

    pub fn flat_forces(&self) -> Vec<f64> {
        self.contact_forces.iter().flat_map(|f| [f.x, f.y, f.z]).collect()
    }
}

/// Moves every vertex of `region` rigidly by `target` in `n_steps` equal
/// increments, reassembling the stiffness at the updated geometry before each
/// increment.
pub fn deform(
    mesh: &TetMesh,
    d: &Elasticity,
    region: &str,
    target: &Vec3,
    n_steps: usize,
) -> Result<DeformResult, FemError> {
    if n_steps == 0 {
        return Err(FemError::InvalidSteps);
    }
    if !target.iter().all(|c| c.is_finite()) {
        return Err(FemError::InvalidContact("non-finite target displacement".into()));
    }
    let contact = &mesh.region(region)?.vertices;
    let contact_dofs: Vec<usize> = contact
        .iter()
        .flat_map(|&v| {
            let f = mesh.free_index(v).expect("contact vertices are free");
            [3 * f, 3 * f + 1, 3 * f + 2]
        })
        .collect();
    let increment = target / n_steps as f64;
    let du_c = DVector::from_iterator(
        contact_dofs.len(),
        contact.iter().flat_map(|_| [increment.x, increment.y, increment.z]),
    );

    let n_free = mesh.free_count();
    let free = mesh.free_vertices();
    let mut positions = mesh.vertices().to_vec();
    let mut u = DVector::<f64>::zeros(3 * n_free);
    let mut f_c = DVector::<f64>::zeros(contact_dofs.len());
    let mut residuals = Vec::with_capacity(n_steps);

    for step in 0..n_steps {
        let sys = assemble(mesh, &positions, d).map_err(|e| e.at_step(step))?;
        let sol = solve_partitioned(&sys.k, &contact_dofs, &du_c).map_err(|e| e.at_step(step))?;
        let du = sol.full_displacement(&du_c);
        let df = sol.full_force();
        let df_norm = df.norm();
        residuals.push(if df_norm > 0.0 { (&sys.k * &du - &df).norm() / df_norm } else { 0.0 });

        u += &du;
        f_c += &sol.f_c;
        for (fi, &v) in free.iter().enumerate() {
            positions[v] += Vec3::new(du[3 * fi], du[3 * fi + 1], du[3 * fi + 2]);
        }
    }
    // The last increment is never reassembled, so check the final shape here.
    for (t, tet) in mesh.tets().iter().enumerate() {
        let [a, b, c, e] = tet.map(|i| positions[i]);
        let volume = signed_volume(&a, &b, &c, &e);
        if !(volume > 0.0) {
            return Err(FemError::InvertedElement { tet: t, vertices: *tet, volume, step: Some(n_steps) });
        }
    }

    Ok(DeformResult {
        displacements: (0..n_free).map(|i| Vec3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2])).collect(),
        contact_forces: (0..contact.len()).map(|i| Vec3::new(f_c[3 * i], f_c[3 * i + 1], f_c[3 * i + 2])).collect(),
        steps: n_steps,
        residuals,
    })
}
