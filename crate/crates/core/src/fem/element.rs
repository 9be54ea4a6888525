use nalgebra::{Matrix3, SMatrix};

use super::{Elasticity, FemError};
use crate::mesh::signed_volume;
use crate::Vec3;

/// Constant strain-displacement matrix of a linear tetrahedron (6×12).
pub type StrainDisplacement = SMatrix<f64, 6, 12>;
pub type ElementStiffness = SMatrix<f64, 12, 12>;

/// `B` and the signed volume for the tetrahedron with corners `x`.
///
/// Columns `3a..3a+3` belong to node `a`; rows follow the Voigt ordering
/// `(xx, yy, zz, xy, yz, zx)` with engineering shear.
pub fn strain_displacement(x: &[Vec3; 4]) -> Result<(StrainDisplacement, f64), FemError> {
    let volume = signed_volume(&x[0], &x[1], &x[2], &x[3]);
    if !(volume > 0.0) {
        return Err(FemError::DegenerateElement { volume });
    }
    let jac = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
    let inv = jac.try_inverse().ok_or(FemError::DegenerateElement { volume })?;
    // Row k of J⁻¹ is the gradient of the shape function of node k + 1.
    let mut grads = [Vec3::zeros(); 4];
    for k in 0..3 {
        grads[k + 1] = inv.row(k).transpose();
    }
    grads[0] = -(grads[1] + grads[2] + grads[3]);

    let mut b = StrainDisplacement::zeros();
    for (a, g) in grads.iter().enumerate() {
        let c = 3 * a;
        b[(0, c)] = g.x;
        b[(1, c + 1)] = g.y;
        b[(2, c + 2)] = g.z;
        b[(3, c)] = g.y;
        b[(3, c + 1)] = g.x;
        b[(4, c + 1)] = g.z;
        b[(4, c + 2)] = g.y;
        b[(5, c)] = g.z;
        b[(5, c + 2)] = g.x;
    }
    Ok((b, volume))
}

/// `K_e = Δ · Bᵀ D B`.
pub fn element_stiffness(x: &[Vec3; 4], d: &Elasticity) -> Result<ElementStiffness, FemError> {
    let (b, volume) = strain_displacement(x)?;
    Ok(b.transpose() * d * b * volume)
}
