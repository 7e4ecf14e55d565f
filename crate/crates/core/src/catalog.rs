//! Small hand-built tensors that separate the constraint families.

use crate::linalg::{c, CMat3, Mat3, C64};
use crate::tensor::{ComplexTensor, RealTensor};

/// Satisfies the epipolar and extended rank constraints exactly, yet every
/// slice has the same left null vector, so the second epipole is undefined.
pub fn ambiguous_epipole() -> RealTensor {
    let d = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
    RealTensor::new(Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0), d, d)
}

/// Satisfies the nine eigenvalue quartics but not the six further quartics.
pub fn eigenvalue_only() -> RealTensor {
    RealTensor::new(
        Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0),
        Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
        Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0),
    )
}

/// Complex trifocal tensor satisfying all fifteen quartics that is not
/// calibrated. Real input types cannot hold it, so the calibration routines
/// never see it.
pub fn complex_quartic_solution() -> ComplexTensor {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    ComplexTensor::new(
        CMat3::new(i, z, z, z, i, z, z, z, z),
        CMat3::new(z, z, i, -i, -one, one, z, z, z),
        CMat3::new(one, z, z, -i, z, z, i, one, z),
    )
}

/// Camera blocks `(A, a, M, b)` reproducing [`complex_quartic_solution`] as
/// `T_k = A e_k bᵀ - a e_kᵀ M`.
pub fn complex_quartic_solution_blocks() -> (CMat3, [C64; 3], CMat3, [C64; 3]) {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let a_mat = CMat3::from_diagonal(&nalgebra::Vector3::new(one, -one, one));
    let m = CMat3::new(z, -i, z, z, z, -one, i, z, z);
    (a_mat, [i, one, z], m, [i, one, z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{eigenvalue_quartics, quartics15, six_quartics};
    use crate::error::Error;
    use crate::linalg::CVec3;
    use crate::tensor::{epipolar_residuals, epipoles, extended_rank_coeffs, ComplexTensor};

    #[test]
    fn ambiguous_epipole_tensor() {
        let t = ambiguous_epipole();
        let (l, r) = epipolar_residuals(&t).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        assert!(extended_rank_coeffs(&t).iter().all(|v| *v == 0.0));
        assert!(matches!(epipoles(&t), Err(Error::AmbiguousEpipole(_))));
    }

    #[test]
    fn eigenvalue_only_tensor() {
        let t = eigenvalue_only();
        assert!(eigenvalue_quartics(&t).iter().all(|v| *v == 0.0));
        assert_eq!(six_quartics(&t), [-8.0, -16.0, 8.0, -16.0, -8.0, -16.0]);
    }

    #[test]
    fn complex_solution_satisfies_quartics_and_has_camera_form() {
        let t = complex_quartic_solution();
        assert!(quartics15(&t).iter().all(|v| v.norm() <= 1e-12));
        let (a_mat, a, m, b) = complex_quartic_solution_blocks();
        let (a, b) = (CVec3::from(a), CVec3::from(b));
        let rebuilt = ComplexTensor {
            slices: [0, 1, 2].map(|k| a_mat.column(k) * b.transpose() - a * m.row(k)),
        };
        assert_eq!(rebuilt, t);
    }
}
