//! Fundamental and essential matrices of two views.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det, skew, svd3, trace, Mat3, Rotation, Rotation3, Scalar, Vec3};

/// `F = [a]_× A` for the second camera `[A | a]`; `q2ᵀ F q1 = 0` for
/// corresponding points.
pub fn fundamental_from_cameras(a_mat: &Mat3, a: &Vec3) -> Mat3 {
    skew(a) * a_mat
}

/// An essential matrix `E = [t]_× R`, optionally with its factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix<T: Scalar> {
    pub m: Matrix3<T>,
    pub factors: Option<(Rotation<T>, Vector3<T>)>,
}

impl<T: Scalar> EssentialMatrix<T> {
    /// True when the translation vanishes and `E` is the zero matrix.
    pub fn is_degenerate(&self) -> bool {
        self.m.norm() == 0.0
    }
}

/// `E = [t]_× R`.
pub fn essential_from_pose<T: Scalar>(r: &Rotation<T>, t: &Vector3<T>) -> EssentialMatrix<T> {
    EssentialMatrix {
        m: skew(t) * r.matrix(),
        factors: Some((*r, *t)),
    }
}

/// `φ(M) = tr(MMᵀ)² - 2 tr((MMᵀ)²)`.
pub fn phi<T: Scalar>(m: &Matrix3<T>) -> T {
    let g = m * m.transpose();
    let tr = trace(&g);
    tr * tr - trace(&(g * g)) * T::from_real(2.0)
}

/// `(tr(MMᵀ) I - 2MMᵀ) M`.
pub fn essential_cubic_residual<T: Scalar>(m: &Matrix3<T>) -> Matrix3<T> {
    let g = m * m.transpose();
    (Matrix3::identity() * trace(&g) - g * T::from_real(2.0)) * m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EssentialClass {
    Essential,
    NotEssential,
}

/// Outcome of the determinant / trace-quartic test on a unit-norm copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialClassification {
    pub class: EssentialClass,
    pub det: f64,
    pub phi: f64,
    /// Rank below two: a limit of essential matrices rather than `[t]_× R`
    /// with `t ≠ 0`.
    pub rank_deficient: bool,
}

pub const ESSENTIAL_TOL: f64 = 1e-9;

/// Essential iff `|det M| ≤ τ` and `|φ(M)| ≤ τ` after scaling to unit
/// Frobenius norm.
pub fn classify_essential_real(m: &Mat3, tol: f64) -> EssentialClassification {
    let n = m.norm();
    if n == 0.0 {
        return EssentialClassification {
            class: EssentialClass::Essential,
            det: 0.0,
            phi: 0.0,
            rank_deficient: true,
        };
    }
    let u = m / n;
    let d = det(&u);
    let p = phi(&u);
    let s = svd3(&u);
    let class = if d.abs() <= tol && p.abs() <= tol {
        EssentialClass::Essential
    } else {
        EssentialClass::NotEssential
    };
    EssentialClassification {
        class,
        det: d,
        phi: p,
        rank_deficient: s.sigma[1] <= 1e-6 * s.sigma[0],
    }
}

/// The four `(R, t)` with `[t]_× R ∝ E` and `|t| = 1`, from the SVD of `E`.
///
/// Ordered `(U Wᵀ Vᵀ, u3)`, `(U W Vᵀ, -u3)`, `(U Wᵀ Vᵀ, -u3)`, `(U W Vᵀ, u3)`,
/// where the first two reproduce `+E` up to a positive factor.
pub fn decompose_essential(e: &Mat3) -> Result<[(Rotation3, Vec3); 4]> {
    let s = svd3(e);
    if !(s.sigma[1] > 1e-6 * s.sigma[0]) {
        let ratio = if s.sigma[0] > 0.0 { s.sigma[1] / s.sigma[0] } else { 0.0 };
        return Err(Error::DegenerateRank(ratio));
    }
    let w = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let u = s.u.matrix();
    let vt = s.v.matrix().transpose();
    let ra = Rotation3::new_unchecked(u * w.transpose() * vt);
    let rb = Rotation3::new_unchecked(u * w * vt);
    let u3: Vec3 = u.column(2).into_owned();
    Ok([(ra, u3), (rb, -u3), (ra, -u3), (rb, u3)])
}
