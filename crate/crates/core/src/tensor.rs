//! Trifocal tensors as triples of correlation slices.

use nalgebra::{Matrix3, Matrix3x4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    det, right_null_vector, sign_canonical, skew, to_complex, Mat3, Rotation, Scalar, Vec3, C64,
};

/// A `(2, 1)` tensor `T = [T1 T2 T3]`, stored as its three correlation slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrifocalTensor<T: Scalar> {
    pub slices: [Matrix3<T>; 3],
}

pub type RealTensor = TrifocalTensor<f64>;
pub type ComplexTensor = TrifocalTensor<C64>;

impl<T: Scalar> TrifocalTensor<T> {
    pub fn new(t1: Matrix3<T>, t2: Matrix3<T>, t3: Matrix3<T>) -> Self {
        TrifocalTensor { slices: [t1, t2, t3] }
    }

    pub fn zeros() -> Self {
        TrifocalTensor { slices: [Matrix3::zeros(); 3] }
    }

    /// Builds a tensor from `f(k, i, j) = (T_k)_{ij}` (0-based).
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        TrifocalTensor {
            slices: [0, 1, 2].map(|k| Matrix3::from_fn(|i, j| f(k, i, j))),
        }
    }

    pub fn slice(&self, k: usize) -> &Matrix3<T> {
        &self.slices[k]
    }

    /// Frobenius norm over all 27 entries (conjugated for complex tensors).
    pub fn norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(|s| s.iter().all(|z| z.is_finite()))
    }

    pub fn scale(&self, factor: T) -> Self {
        TrifocalTensor { slices: self.slices.map(|s| s * factor) }
    }

    /// Copy scaled to unit Frobenius norm, together with the original norm.
    /// The zero tensor is returned unchanged.
    pub fn normalized(&self) -> (Self, f64) {
        let n = self.norm();
        if n == 0.0 {
            return (*self, 0.0);
        }
        (self.scale(T::from_real(1.0 / n)), n)
    }

    /// `Σ_k x_k T_k`.
    pub fn contract(&self, x: &Vector3<T>) -> Matrix3<T> {
        self.slices[0] * x[0] + self.slices[1] * x[1] + self.slices[2] * x[2]
    }

    /// Relabels the slices by the cyclic permutation `1 → 2 → 3 → 1`:
    /// the result has slices `(T2, T3, T1)`.
    pub fn cycled(&self) -> Self {
        TrifocalTensor::new(self.slices[1], self.slices[2], self.slices[0])
    }

    /// The 27 entries in the order `k·9 + i·3 + j`.
    pub fn to_flat(&self) -> [T; 27] {
        let mut out = [T::zero(); 27];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    out[k * 9 + i * 3 + j] = self.slices[k][(i, j)];
                }
            }
        }
        out
    }

    pub fn from_flat(v: &[T]) -> Self {
        assert_eq!(v.len(), 27, "a trifocal tensor has 27 entries");
        TrifocalTensor::from_fn(|k, i, j| v[k * 9 + i * 3 + j])
    }

    /// Frobenius distance to `other` after scaling both to unit norm and
    /// choosing the relative scalar phase that aligns them best.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let (a, na) = self.normalized();
        let (b, nb) = other.normalized();
        if na == 0.0 || nb == 0.0 {
            return if na == nb { 0.0 } else { 1.0 };
        }
        let mut inner = C64::new(0.0, 0.0);
        for k in 0..3 {
            for (x, y) in a.slices[k].iter().zip(b.slices[k].iter()) {
                inner += x.to_c64().conj() * y.to_c64();
            }
        }
        let phase = if inner.norm() == 0.0 { C64::new(1.0, 0.0) } else { inner / inner.norm() };
        let mut d2 = 0.0;
        for k in 0..3 {
            for (x, y) in a.slices[k].iter().zip(b.slices[k].iter()) {
                d2 += (x.to_c64() * phase - y.to_c64()).norm_sqr();
            }
        }
        d2.sqrt()
    }
}

impl RealTensor {
    pub fn to_complex(&self) -> ComplexTensor {
        TrifocalTensor { slices: self.slices.map(|s| to_complex(&s)) }
    }
}

impl<T: Scalar> std::ops::Sub for TrifocalTensor<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        TrifocalTensor::from_fn(|k, i, j| self.slices[k][(i, j)] - rhs.slices[k][(i, j)])
    }
}

impl<T: Scalar> std::ops::Add for TrifocalTensor<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        TrifocalTensor::from_fn(|k, i, j| self.slices[k][(i, j)] + rhs.slices[k][(i, j)])
    }
}

/// Second and third cameras relative to a first camera `[I | 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraTriple<T: Scalar> {
    /// `P2 = [R2 | t2]`, `P3 = [R3 | t3]`.
    Calibrated {
        r2: Rotation<T>,
        t2: Vector3<T>,
        r3: Rotation<T>,
        t3: Vector3<T>,
    },
    /// `P2 = [A | a]`, `P3 = [B | b]`.
    Projective {
        a_mat: Matrix3<T>,
        a: Vector3<T>,
        b_mat: Matrix3<T>,
        b: Vector3<T>,
    },
}

impl<T: Scalar> CameraTriple<T> {
    /// `(A, a, B, b)` with `A = R2`, `a = t2`, `B = R3`, `b = t3` in the calibrated case.
    pub fn blocks(&self) -> (Matrix3<T>, Vector3<T>, Matrix3<T>, Vector3<T>) {
        match *self {
            CameraTriple::Calibrated { r2, t2, r3, t3 } => (r2.into_inner(), t2, r3.into_inner(), t3),
            CameraTriple::Projective { a_mat, a, b_mat, b } => (a_mat, a, b_mat, b),
        }
    }

    /// The 3x4 camera matrices `P1 = [I | 0]`, `P2`, `P3`.
    pub fn projections(&self) -> [Matrix3x4<T>; 3] {
        let (a_mat, a, b_mat, b) = self.blocks();
        let p1 = Matrix3x4::from_fn(|i, j| if i == j { T::one() } else { T::zero() });
        let mut p2 = Matrix3x4::zeros();
        let mut p3 = Matrix3x4::zeros();
        p2.fixed_view_mut::<3, 3>(0, 0).copy_from(&a_mat);
        p2.set_column(3, &a);
        p3.fixed_view_mut::<3, 3>(0, 0).copy_from(&b_mat);
        p3.set_column(3, &b);
        [p1, p2, p3]
    }
}

/// Trifocal tensor of three cameras: `T_k = A e_k bᵀ - a e_kᵀ Bᵀ`.
/// For calibrated cameras this is `T̂_k = R2 e_k t3ᵀ - t2 e_kᵀ R3ᵀ`.
pub fn trifocal_from_cameras<T: Scalar>(cams: &CameraTriple<T>) -> TrifocalTensor<T> {
    let (a_mat, a, b_mat, b) = cams.blocks();
    TrifocalTensor {
        slices: [0, 1, 2].map(|k| a_mat.column(k) * b.transpose() - a * b_mat.column(k).transpose()),
    }
}

/// `T'_j = Q2 (Σ_k (Q1)_{jk} T_k) Q3ᵀ`.
pub fn transform<T: Scalar>(
    t: &TrifocalTensor<T>,
    q1: &Rotation<T>,
    q2: &Rotation<T>,
    q3: &Rotation<T>,
) -> TrifocalTensor<T> {
    transform_matrices(t, q1.matrix(), q2.matrix(), q3.matrix())
}

/// Inverse of [`transform`]: `T_k = Q2ᵀ (Σ_j (Q1)_{jk} T'_j) Q3`.
pub fn transform_inverse<T: Scalar>(
    t: &TrifocalTensor<T>,
    q1: &Rotation<T>,
    q2: &Rotation<T>,
    q3: &Rotation<T>,
) -> TrifocalTensor<T> {
    transform_matrices(
        t,
        &q1.matrix().transpose(),
        &q2.matrix().transpose(),
        &q3.matrix().transpose(),
    )
}

pub(crate) fn transform_matrices<T: Scalar>(
    t: &TrifocalTensor<T>,
    m1: &Matrix3<T>,
    m2: &Matrix3<T>,
    m3: &Matrix3<T>,
) -> TrifocalTensor<T> {
    let m3t = m3.transpose();
    TrifocalTensor {
        slices: [0, 1, 2].map(|j| {
            let mix = t.slices[0] * m1[(j, 0)] + t.slices[1] * m1[(j, 1)] + t.slices[2] * m1[(j, 2)];
            m2 * mix * m3t
        }),
    }
}

/// `T'_j = H2 (Σ_k (H1⁻ᵀ)_{jk} T_k) H3ᵀ`: the tensor seen through image
/// homographies `q_v ↦ H_v q_v`.
pub fn apply_homographies(t: &TrifocalTensor<f64>, h1: &Mat3, h2: &Mat3, h3: &Mat3) -> Result<TrifocalTensor<f64>> {
    let h1_inv_t = h1.try_inverse().ok_or(Error::SingularCalibration)?.transpose();
    Ok(transform_matrices(t, &h1_inv_t, h2, h3))
}

fn check_calibration(k: &Mat3) -> Result<()> {
    let n = k.norm();
    let lower = k[(1, 0)].abs() + k[(2, 0)].abs() + k[(2, 1)].abs();
    let diag_ok = (0..3).all(|i| k[(i, i)] > 0.0 && k[(i, i)].is_finite());
    if !diag_ok || lower > 1e-12 * n || !k.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularCalibration);
    }
    Ok(())
}

/// Tensor of cameras `K_v [R_v | t_v]` from the calibrated tensor `T̂`:
/// `T_j ∼ K2 Σ_k (K1⁻ᵀ)_{jk} T̂_k K3ᵀ`, scaled to unit Frobenius norm.
pub fn uncalibrate(t_hat: &TrifocalTensor<f64>, k1: &Mat3, k2: &Mat3, k3: &Mat3) -> Result<TrifocalTensor<f64>> {
    for k in [k1, k2, k3] {
        check_calibration(k)?;
    }
    Ok(apply_homographies(t_hat, k1, k2, k3)?.normalized().0)
}

/// Inverse of [`uncalibrate`]: removes known calibration matrices and scales
/// the result to unit Frobenius norm.
pub fn calibrate(t: &TrifocalTensor<f64>, k1: &Mat3, k2: &Mat3, k3: &Mat3) -> Result<TrifocalTensor<f64>> {
    for k in [k1, k2, k3] {
        check_calibration(k)?;
    }
    let inv = |k: &Mat3| k.try_inverse().ok_or(Error::SingularCalibration);
    Ok(apply_homographies(t, &inv(k1)?, &inv(k2)?, &inv(k3)?)?.normalized().0)
}

/// Epipoles of a trifocal tensor in the second and third image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpipolePair {
    pub a2: Vec3,
    pub a3: Vec3,
}

/// Left and right null vectors of each slice, unit norm and sign-canonical.
pub(crate) fn slice_null_vectors<T: Scalar>(
    t: &TrifocalTensor<T>,
    rank_tol: f64,
) -> Result<([Vector3<T>; 3], [Vector3<T>; 3])> {
    let mut left = [Vector3::zeros(); 3];
    let mut right = [Vector3::zeros(); 3];
    for k in 0..3 {
        let s = &t.slices[k];
        let (r, ratio, _) = right_null_vector(s);
        if !(ratio > rank_tol) {
            return Err(Error::RankDeficientSlice { slice: k + 1, ratio });
        }
        let (l, _, _) = right_null_vector(&s.transpose());
        left[k] = sign_canonical(&l);
        right[k] = sign_canonical(&r);
    }
    Ok((left, right))
}

const DEFAULT_RANK_TOL: f64 = 1e6 * f64::EPSILON;

/// Epipoles `a2 ∥ a`, `a3 ∥ b` as the common null vectors of the slices' left
/// (resp. right) null vectors.
pub fn epipoles(t: &TrifocalTensor<f64>) -> Result<EpipolePair> {
    epipoles_with_tol(t, DEFAULT_RANK_TOL)
}

pub fn epipoles_with_tol(t: &TrifocalTensor<f64>, rank_tol: f64) -> Result<EpipolePair> {
    let (left, right) = slice_null_vectors(t, rank_tol)?;
    let pick = |vs: &[Vec3; 3]| -> Result<Vec3> {
        let stacked = Mat3::from_rows(&[vs[0].transpose(), vs[1].transpose(), vs[2].transpose()]);
        let (e, r2, _) = right_null_vector(&stacked);
        if !(r2 > rank_tol) {
            return Err(Error::AmbiguousEpipole(r2));
        }
        Ok(sign_canonical(&e))
    };
    Ok(EpipolePair { a2: pick(&left)?, a3: pick(&right)? })
}

/// `(det[l1 l2 l3], det[r1 r2 r3])` with unit, sign-canonical null vectors.
///
/// Only the slices need rank two; the stacked null vectors may be rank
/// deficient, in which case both residuals vanish.
pub fn epipolar_residuals<T: Scalar>(t: &TrifocalTensor<T>) -> Result<(T, T)> {
    let (l, r) = slice_null_vectors(t, DEFAULT_RANK_TOL)?;
    let dl = det(&Matrix3::from_columns(&l));
    let dr = det(&Matrix3::from_columns(&r));
    Ok((dl, dr))
}

/// Monomials `α^i β^j γ^k` with `i + j + k = 3` in lexicographic order.
pub const CUBIC_MONOMIALS: [[usize; 3]; 10] = [
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

fn cubic_index(e: [usize; 3]) -> usize {
    CUBIC_MONOMIALS.iter().position(|m| *m == e).expect("degree-3 exponent")
}

/// Coefficients of `det(αT1 + βT2 + γT3)` in [`CUBIC_MONOMIALS`] order, by
/// multilinear expansion of the determinant in its columns.
pub fn extended_rank_coeffs<T: Scalar>(t: &TrifocalTensor<T>) -> [T; 10] {
    let mut out = [T::zero(); 10];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let m = Matrix3::from_columns(&[
                    t.slices[i].column(0).into_owned(),
                    t.slices[j].column(1).into_owned(),
                    t.slices[k].column(2).into_owned(),
                ]);
                let mut e = [0usize; 3];
                e[i] += 1;
                e[j] += 1;
                e[k] += 1;
                out[cubic_index(e)] += det(&m);
            }
        }
    }
    out
}

/// `[q2]_× (Σ_j (q1)_j T_j) [q3]_×`, zero for corresponding image points.
pub fn incidence_residual<T: Scalar>(
    t: &TrifocalTensor<T>,
    q1: &Vector3<T>,
    q2: &Vector3<T>,
    q3: &Vector3<T>,
) -> Matrix3<T> {
    skew(q2) * t.contract(q1) * skew(q3)
}
