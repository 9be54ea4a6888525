use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use super::FemError;

/// 6×6 isotropic constitutive matrix in Voigt notation.
pub type Elasticity = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Young's modulus, Pa.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { young_modulus: 1.0e6, poisson_ratio: 0.40 }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), FemError> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(FemError::InvalidMaterial(format!(
                "Young's modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio >= 0.0) {
            return Err(FemError::InvalidMaterial(format!(
                "Poisson's ratio must be non-negative, got {}",
                self.poisson_ratio
            )));
        }
        if self.poisson_ratio >= 0.5 {
            return Err(FemError::SingularMaterial { poisson_ratio: self.poisson_ratio });
        }
        Ok(())
    }
}

/// Isotropic linear-elastic `D` with engineering shear strains.
pub fn elasticity_matrix(mat: &MaterialParams) -> Result<Elasticity, FemError> {
    mat.validate()?;
    let (e, nu) = (mat.young_modulus, mat.poisson_ratio);
    let scale = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let normal = scale * (1.0 - nu);
    let coupling = scale * nu;
    let shear = e / (2.0 * (1.0 + nu));
    let mut d = Elasticity::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = if i == j { normal } else { coupling };
        }
        d[(i + 3, i + 3)] = shear;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_unit_material() {
        let d = elasticity_matrix(&MaterialParams { young_modulus: 1.0, poisson_ratio: 0.0 }).unwrap();
        assert_eq!(d, Elasticity::from_diagonal(&nalgebra::Vector6::new(1.0, 1.0, 1.0, 0.5, 0.5, 0.5)));
    }

    #[test]
    fn soft_tissue_values() {
        let d = elasticity_matrix(&MaterialParams::default()).unwrap();
        // E(1-ν)/((1+ν)(1-2ν)) = 0.6/0.28, Eν/((1+ν)(1-2ν)) = 0.4/0.28, E/(2(1+ν)) = 1/2.8 (MPa)
        assert!((d[(0, 0)] - 0.6 / 0.28 * 1e6).abs() < 1e-6);
        assert!((d[(0, 1)] - 0.4 / 0.28 * 1e6).abs() < 1e-6);
        assert!((d[(3, 3)] - 1e6 / 2.8).abs() < 1e-6);
        assert!((d[(0, 0)] / 1e6 - 2.142857).abs() < 1e-6);
        assert!((d[(1, 2)] / 1e6 - 1.428571).abs() < 1e-6);
        assert!((d[(5, 5)] / 1e6 - 0.357143).abs() < 1e-6);
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn rejects_incompressible_and_invalid() {
        let err = elasticity_matrix(&MaterialParams { young_modulus: 1.0, poisson_ratio: 0.5 }).unwrap_err();
        assert!(matches!(err, FemError::SingularMaterial { .. }));
        assert!(elasticity_matrix(&MaterialParams { young_modulus: 0.0, poisson_ratio: 0.3 }).is_err());
        assert!(elasticity_matrix(&MaterialParams { young_modulus: 1.0, poisson_ratio: -0.1 }).is_err());
    }

    #[test]
    fn positive_definite_over_parameter_range() {
        for e in [1.0, 1e3, 1e6] {
            for nu in [0.0, 0.1, 0.25, 0.4, 0.49, 0.499] {
                let d = elasticity_matrix(&MaterialParams { young_modulus: e, poisson_ratio: nu }).unwrap();
                let min = d.symmetric_eigenvalues().min();
                assert!(min > 0.0, "E={e} nu={nu} min eig {min}");
            }
        }
    }
}
