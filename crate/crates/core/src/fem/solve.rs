use nalgebra::{DMatrix, DVector};

use super::{FemError, StiffnessSystem};
use crate::linalg::EnvelopeCholesky;

/// Solution of a forced-displacement problem.
///
/// DOFs are split into the prescribed contact set `c` and the remaining free
/// set `n`. With no external load on `n`,
///
/// ```text
/// K_nn u_n = -K_nc u_c
/// f_c      =  K_cc u_c + K_cn u_n
/// ```
///
/// which is the same solution as partitioning `L = K⁻¹` and solving
/// `u_c = L_cc f_c`, `u_n = L_nc f_c`, but without forming the inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedSolution {
    pub contact_dofs: Vec<usize>,
    /// Remaining DOFs in ascending order.
    pub other_dofs: Vec<usize>,
    pub f_c: DVector<f64>,
    pub u_n: DVector<f64>,
}

impl ForcedSolution {
    /// Full displacement vector (`u_c` scattered back with `u_n`).
    pub fn full_displacement(&self, u_c: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(self.contact_dofs.len() + self.other_dofs.len());
        for (&d, &v) in self.contact_dofs.iter().zip(u_c.iter()) {
            u[d] = v;
        }
        for (&d, &v) in self.other_dofs.iter().zip(self.u_n.iter()) {
            u[d] = v;
        }
        u
    }

    /// Full force vector: `f_c` at contact DOFs, zero elsewhere.
    pub fn full_force(&self) -> DVector<f64> {
        let mut f = DVector::zeros(self.contact_dofs.len() + self.other_dofs.len());
        for (&d, &v) in self.contact_dofs.iter().zip(self.f_c.iter()) {
            f[d] = v;
        }
        f
    }
}

pub fn solve_forced_displacement(
    sys: &StiffnessSystem,
    contact_dofs: &[usize],
    u_c: &DVector<f64>,
) -> Result<ForcedSolution, FemError> {
    solve_partitioned(&sys.k, contact_dofs, u_c)
}

pub(crate) fn solve_partitioned(
    k: &DMatrix<f64>,
    contact_dofs: &[usize],
    u_c: &DVector<f64>,
) -> Result<ForcedSolution, FemError> {
    let n = k.nrows();
    if contact_dofs.is_empty() {
        return Err(FemError::InvalidContact("no contact DOFs".into()));
    }
    if u_c.len() != contact_dofs.len() {
        return Err(FemError::InvalidContact(format!(
            "{} prescribed values for {} contact DOFs",
            u_c.len(),
            contact_dofs.len()
        )));
    }
    if !u_c.iter().all(|v| v.is_finite()) {
        return Err(FemError::InvalidContact("non-finite prescribed displacement".into()));
    }
    let mut is_contact = vec![false; n];
    for &d in contact_dofs {
        if d >= n {
            return Err(FemError::InvalidContact(format!("contact DOF {d} outside system of {n}")));
        }
        if std::mem::replace(&mut is_contact[d], true) {
            return Err(FemError::InvalidContact(format!("contact DOF {d} listed twice")));
        }
    }
    let other: Vec<usize> = (0..n).filter(|&d| !is_contact[d]).collect();

    // rhs = -K_nc u_c
    let mut rhs = DVector::zeros(other.len());
    for (r, &i) in other.iter().enumerate() {
        let mut s = 0.0;
        for (&j, &u) in contact_dofs.iter().zip(u_c.iter()) {
            s += k[(i, j)] * u;
        }
        rhs[r] = -s;
    }
    let u_n = if other.is_empty() {
        DVector::zeros(0)
    } else {
        let k_nn = DMatrix::from_fn(other.len(), other.len(), |r, c| k[(other[r], other[c])]);
        let chol = EnvelopeCholesky::factor(&k_nn).map_err(|source| FemError::Singular { source, step: None })?;
        chol.solve(&rhs)
    };

    let f_c = DVector::from_iterator(
        contact_dofs.len(),
        contact_dofs.iter().map(|&i| {
            let cc: f64 = contact_dofs.iter().zip(u_c.iter()).map(|(&j, &u)| k[(i, j)] * u).sum();
            let cn: f64 = other.iter().zip(u_n.iter()).map(|(&j, &u)| k[(i, j)] * u).sum();
            cc + cn
        }),
    );
    Ok(ForcedSolution { contact_dofs: contact_dofs.to_vec(), other_dofs: other, f_c, u_n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dof_hand_example() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let sol = solve_partitioned(&k, &[0], &DVector::from_element(1, 1.0)).unwrap();
        assert!((sol.u_n[0] - 0.5).abs() <= 1e-12);
        assert!((sol.f_c[0] - 1.5).abs() <= 1e-12);
        // Same through L = K⁻¹ = (1/3)[[2,1],[1,2]]: f_c = u_c / L_cc, u_n = L_nc f_c.
        let (l_cc, l_nc) = (2.0 / 3.0, 1.0 / 3.0);
        let f_c = 1.0 / l_cc;
        assert!((f_c - 1.5f64).abs() <= 1e-12);
        assert!((l_nc * f_c - 0.5f64).abs() <= 1e-12);
    }

    #[test]
    fn zero_prescription_gives_zero_solution() {
        let k = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0]);
        let sol = solve_partitioned(&k, &[1], &DVector::zeros(1)).unwrap();
        assert_eq!(sol.f_c.amax(), 0.0);
        assert_eq!(sol.u_n.amax(), 0.0);
    }

    #[test]
    fn reconstructed_system_satisfies_k_u_equals_f() {
        let k = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.5, -1.0, 4.0, -1.0, 0.5, -1.0, 4.0]);
        let u_c = DVector::from_vec(vec![0.3, -0.2]);
        let sol = solve_partitioned(&k, &[2, 0], &u_c).unwrap();
        let u = sol.full_displacement(&u_c);
        let f = sol.full_force();
        assert!((&k * &u - &f).norm() <= 1e-9 * f.norm());
    }

    #[test]
    fn all_dofs_prescribed() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let sol = solve_partitioned(&k, &[0, 1], &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(sol.u_n.len(), 0);
        assert_eq!(sol.f_c.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn errors() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let one = DVector::from_element(1, 1.0);
        assert!(matches!(solve_partitioned(&k, &[], &DVector::zeros(0)), Err(FemError::InvalidContact(_))));
        assert!(matches!(solve_partitioned(&k, &[5], &one), Err(FemError::InvalidContact(_))));
        let singular = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(solve_partitioned(&singular, &[0], &one), Err(FemError::Singular { .. })));
        assert!(matches!(
            solve_partitioned(&k, &[0], &DVector::from_element(1, f64::NAN)),
            Err(FemError::InvalidContact(_))
        ));
    }
}
