//! Fixed-size 3-vector and 3x3 matrix kernel over real and complex scalars.
//!
//! Complex transposition is always the bilinear (unconjugated) transpose:
//! every identity in this crate is polynomial in the entries, so `sᵀs = 0`
//! means `Σ sᵢ² = 0`, not `Σ |sᵢ|² = 0`. Norms used for tolerances are the
//! conjugated Frobenius norms, which are true norms.

use nalgebra::{ComplexField, DMatrix, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<C64>;
pub type Mat3 = Matrix3<f64>;
pub type CMat3 = Matrix3<C64>;

/// Scalar field for all generic routines: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// Lift to a complex number.
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn to_c64(self) -> C64 {
        self
    }
}

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Standard basis vector `e_k` (0-based index).
pub fn basis<T: Scalar>(k: usize) -> Vector3<T> {
    let mut v = Vector3::zeros();
    v[k] = T::one();
    v
}

pub fn to_complex_vec(v: &Vec3) -> CVec3 {
    v.map(|x| C64::new(x, 0.0))
}

pub fn to_complex(m: &Mat3) -> CMat3 {
    m.map(|x| C64::new(x, 0.0))
}

pub fn from_real<T: Scalar>(x: f64) -> T {
    T::from_real(x)
}

/// `[v]_×`, the matrix with `[v]_× b = v × b`.
pub fn skew<T: Scalar>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v[2], v[1], v[2], z, -v[0], -v[1], v[0], z)
}

/// Bilinear cross product (no conjugation).
pub fn cross<T: Scalar>(a: &Vector3<T>, b: &Vector3<T>) -> Vector3<T> {
    Vector3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

/// Bilinear dot product `aᵀb`.
pub fn bdot<T: Scalar>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn trace<T: Scalar>(m: &Matrix3<T>) -> T {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)]
}

/// Determinant by cofactor expansion along the first row.
pub fn det<T: Scalar>(m: &Matrix3<T>) -> T {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Matrix of cofactors (not transposed): `(M*)_{ij} = (-1)^{i+j} minor_{ij}`.
pub fn cofactor<T: Scalar>(m: &Matrix3<T>) -> Matrix3<T> {
    Matrix3::from_fn(|i, j| {
        let (r0, r1) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c0, c1) = match j {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let minor = m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    })
}

/// Conjugated Frobenius norm.
pub fn fro<T: Scalar>(m: &Matrix3<T>) -> f64 {
    m.norm()
}

/// Special orthogonal 3x3 matrix, real (`SO(3)`) or complex (`SO(3, C)`).
///
/// Orthogonality is checked with the bilinear transpose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Scalar>(Matrix3<T>);

pub type Rotation3 = Rotation<f64>;
pub type CRotation3 = Rotation<C64>;

/// Tolerance for rotation validation, relative to `|R|²`.
pub const ROTATION_TOL: f64 = 1e-12;

impl<T: Scalar> Rotation<T> {
    /// Validates `RRᵀ = I` and `det R = 1` to `tol · |R|²`.
    pub fn with_tolerance(m: Matrix3<T>, tol: f64) -> Result<Self> {
        let n2 = m.norm_squared().max(1.0);
        let orth = (m * m.transpose() - Matrix3::identity()).norm();
        if !orth.is_finite() || orth > tol * n2 {
            return Err(Error::NotRotation(format!("|RRᵀ - I| = {orth:e}")));
        }
        let d = (det(&m) - T::one()).modulus();
        if d > tol * n2 {
            return Err(Error::NotRotation(format!("|det R - 1| = {d:e}")));
        }
        Ok(Rotation(m))
    }

    pub fn new(m: Matrix3<T>) -> Result<Self> {
        Self::with_tolerance(m, ROTATION_TOL)
    }

    /// Wraps a matrix known to be a rotation by construction.
    pub fn new_unchecked(m: Matrix3<T>) -> Self {
        Rotation(m)
    }

    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<T> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Rotation(self.0 * other.0)
    }

    /// Deviation `|RRᵀ - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).norm()
    }
}

impl Rotation3 {
    pub fn to_complex(&self) -> CRotation3 {
        Rotation(to_complex(&self.0))
    }

    /// Rotation about a unit axis by `angle` radians (Rodrigues).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let k = axis.normalize();
        let kx = skew(&k);
        Rotation(Mat3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos()))
    }
}

impl CRotation3 {
    /// Rotation about a real unit axis by a complex angle. The Rodrigues
    /// formula stays bilinear-orthogonal for complex angles.
    pub fn from_axis_complex_angle(axis: &Vec3, angle: C64) -> Self {
        let k = to_complex_vec(&axis.normalize());
        let kx = skew(&k);
        Rotation(CMat3::identity() + kx * angle.sin() + kx * kx * (C64::new(1.0, 0.0) - angle.cos()))
    }
}

/// Real SVD `M = U diag(σ) Vᵀ` with `U, V ∈ SO(3)`.
#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: Rotation3,
    /// `σ1 ≥ σ2 ≥ |σ3|`; `σ3 < 0` only when `det M < 0`.
    pub sigma: [f64; 3],
    pub v: Rotation3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Mat3 {
        self.u.matrix() * Mat3::from_diagonal(&Vec3::from(self.sigma)) * self.v.matrix().transpose()
    }
}

/// SVD of a real 3x3 matrix with both factors in `SO(3)`.
///
/// Singular values are sorted in descending order. When `det M < 0` no
/// factorization with nonnegative singular values and two proper rotations
/// exists, so the sign is carried by `σ3`.
pub fn svd3(m: &Mat3) -> Svd3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut um = Mat3::from_columns(&[u.column(order[0]), u.column(order[1]), u.column(order[2])]);
    let mut vm = Mat3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    let mut sigma = [
        svd.singular_values[order[0]],
        svd.singular_values[order[1]],
        svd.singular_values[order[2]],
    ];
    if um.determinant() < 0.0 {
        um.column_mut(2).neg_mut();
        vm.column_mut(2).neg_mut();
    }
    if vm.determinant() < 0.0 {
        vm.column_mut(2).neg_mut();
        sigma[2] = -sigma[2];
    }
    Svd3 {
        u: Rotation(um),
        sigma,
        v: Rotation(vm),
    }
}

/// Thin SVD `M = U diag(s) Vᴴ` of an `r x n` matrix, `k = min(r, n)`:
/// `U` is `r x k`, `V` is `n x k`, `s` is sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn reconstruct(&self) -> DMatrix<T> {
        let s = DMatrix::from_fn(self.s.len(), self.s.len(), |i, j| if i == j { T::from_real(self.s[i]) } else { T::zero() });
        &self.u * s * self.v.adjoint()
    }

    /// Minimum-norm least-squares solution of `M x = b`, treating singular
    /// values at or below `eps` as zero.
    pub fn solve(&self, b: &nalgebra::DVector<T>, eps: f64) -> nalgebra::DVector<T> {
        let mut y = self.u.adjoint() * b;
        for (i, s) in self.s.iter().enumerate() {
            y[i] = if *s > eps { y[i].unscale(*s) } else { T::zero() };
        }
        &self.v * y
    }
}

/// SVD by one-sided Jacobi rotations.
///
/// Used for every matrix that is not real 3x3: the general bidiagonal SVD
/// in nalgebra returns wrong factors for matrices with clustered singular
/// values, which the camera-block and certificate systems routinely have.
/// Columns of `U` belonging to zero singular values are zero.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> Svd<T> {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.modulus();
                if !(g > f64::EPSILON * (alpha * beta).sqrt()) {
                    continue;
                }
                rotated = true;
                // Rotate the phase out of γ, then apply the real Jacobi rotation.
                let phase = gamma.conjugate().unscale(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)] * phase;
                        mat[(r, p)] = xp.scale(cs) - xq.scale(sn);
                        mat[(r, q)] = xp.scale(sn) + xq.scale(cs);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let u = DMatrix::from_fn(m.nrows(), n, |i, j| {
        let k = order[j];
        if norms[k] > 0.0 {
            a[(i, k)].unscale(norms[k])
        } else {
            T::zero()
        }
    });
    let vs = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Svd { u, s: order.iter().map(|&k| norms[k]).collect(), v: vs }
}

/// Closest rotation to `m` in the Frobenius norm.
pub fn nearest_rotation(m: &Mat3) -> Rotation3 {
    let s = svd3(m);
    Rotation(s.u.matrix() * s.v.matrix().transpose())
}

/// Rotation `H ∈ SO(3)` with `H a = (0, 0, |a|)ᵀ`.
///
/// Built from the Householder reflection that sends `a` to the third axis,
/// followed by a sign flip that restores `det H = +1` and makes the third
/// component positive. Returns `(H, γ)` with `γ = |a|`.
pub fn householder_to_e3(a: &Vec3) -> Result<(Rotation3, f64)> {
    let norm = a.norm();
    if !(norm >= 1e-300) {
        return Err(Error::ZeroVector(norm));
    }
    let gamma0 = if a[2] > 0.0 { -norm } else { norm };
    let mut v = *a;
    v[2] -= gamma0;
    let vv = v.norm_squared();
    let h = Mat3::identity() - v * v.transpose() * (2.0 / vv);
    // h is a reflection with h a = gamma0 e3.
    let flip = if gamma0 > 0.0 {
        Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0))
    } else {
        Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))
    };
    Ok((Rotation(flip * h), norm))
}

/// Real orthonormal frame `P` and scale `κ` with `s ≈ κ P (e1 + i e2)`.
fn isotropic_frame(s: &CVec3) -> Result<(Mat3, f64)> {
    let x = s.map(|z| z.re);
    let y = s.map(|z| z.im);
    let nx = x.norm();
    let ny = y.norm();
    if nx < 1e-300 || ny < 1e-300 {
        return Err(Error::NotIsotropic(1.0));
    }
    let xh = x / nx;
    let yp = y - xh * y.dot(&xh);
    let yh = yp.normalize();
    let zh = xh.cross(&yh);
    Ok((Mat3::from_columns(&[xh, yh, zh]), 0.5 * (nx + ny)))
}

/// Isotropy defect `|sᵀs| / |s|²`.
pub fn isotropy_defect(s: &CVec3) -> f64 {
    let n2 = s.norm_squared();
    if n2 == 0.0 {
        return f64::INFINITY;
    }
    bdot(s, s).norm() / n2
}

/// Complex rotation `R ∈ SO(3, C)` with `R s1 = s2` for nonzero isotropic
/// vectors `s1`, `s2`.
///
/// Each `s_k = x_k + i y_k` has `x_k ⊥ y_k`, `|x_k| = |y_k|`; a real rotation
/// carries `(e1, e2)` onto the normalized pair, and a rotation about `e3` by a
/// complex angle rescales `e1 + i e2` by the required ratio.
pub fn isotropic_rotation(s1: &CVec3, s2: &CVec3) -> Result<CRotation3> {
    for s in [s1, s2] {
        let d = isotropy_defect(s);
        if !(d <= 1e-10) {
            return Err(Error::NotIsotropic(d));
        }
    }
    isotropic_rotation_unchecked(s1, s2)
}

pub(crate) fn isotropic_rotation_unchecked(s1: &CVec3, s2: &CVec3) -> Result<CRotation3> {
    let (p1, k1) = isotropic_frame(s1)?;
    let (p2, k2) = isotropic_frame(s2)?;
    let w = k2 / k1;
    let cw = C64::new(0.5 * (w + 1.0 / w), 0.0);
    let sw = C64::new(0.0, 0.5 * (w - 1.0 / w));
    let z = CMat3::new(
        cw,
        -sw,
        C64::new(0.0, 0.0),
        sw,
        cw,
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    );
    Ok(Rotation(to_complex(&p2) * z * to_complex(&p1).transpose()))
}

/// Completes a unit (bilinear) vector `a` (`aᵀa = 1`) to a complex rotation
/// whose third column is `a`.
pub(crate) fn complete_to_rotation(a: &CVec3) -> CRotation3 {
    let mut best: Option<(CVec3, f64)> = None;
    for k in 0..3 {
        let e = basis::<C64>(k);
        let b = e - a * bdot(a, &e);
        let q = bdot(&b, &b).norm();
        if best.as_ref().is_none_or(|(_, bq)| q > *bq) {
            best = Some((b, q));
        }
    }
    let (b, _) = best.expect("three candidates");
    let b = b / bdot(&b, &b).sqrt();
    let c = cross(a, &b);
    Rotation(CMat3::from_columns(&[b, c, *a]))
}

/// Roots of the monic cubic `x³ + b x² + c x + d` with explicit handling of
/// double and triple roots.
///
/// `scale` bounds the magnitude of the uncertainty in the coefficients in
/// units of machine epsilon (`err_b ≈ eps·scale`, `err_c ≈ eps·scale²`,
/// `err_d ≈ eps·scale³`); a discriminant within that noise is treated as a
/// repeated root.
pub fn solve_cubic(b: C64, c: C64, d: C64, scale: f64) -> [C64; 3] {
    let third = 1.0 / 3.0;
    let p = c - b * b * third;
    let q = b * b * b * (2.0 / 27.0) - b * c * third + d;
    let shift = -b * third;

    let eps = f64::EPSILON;
    let (err_b, err_c, err_d) = (4.0 * eps * scale, 8.0 * eps * scale * scale, 16.0 * eps * scale.powi(3));
    let bn = b.norm();
    let err_p = err_c + 2.0 * bn * err_b * third + eps * p.norm();
    let err_q = (2.0 / 9.0) * bn * bn * err_b + (c.norm() * err_b + bn * err_c) * third + err_d + eps * q.norm();
    let disc = q * q * 0.25 + p * p * p / 27.0;
    let noise = 16.0 * (0.5 * q.norm() * err_q + p.norm_sqr() / 9.0 * err_p) + 4.0 * eps * (q.norm_sqr() * 0.25 + p.norm().powi(3) / 27.0);

    if disc.norm() <= noise {
        if p.norm() <= 16.0 * err_p {
            return [shift; 3];
        }
        let double = -q * 1.5 / p + shift;
        return [simple_from_double(double, b, d), double, double];
    }

    let sq = disc.sqrt();
    let w1 = -q * 0.5 + sq;
    let w2 = -q * 0.5 - sq;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let u = w.powf(third);
    let omega = C64::new(-0.5, 0.75f64.sqrt());
    let mut roots = [C64::new(0.0, 0.0); 3];
    let mut uk = u;
    for r in roots.iter_mut() {
        let t = if uk.norm() == 0.0 { C64::new(0.0, 0.0) } else { uk - p / (uk * 3.0) };
        *r = t + shift;
        uk *= omega;
    }
    for r in roots.iter_mut() {
        *r = newton_polish(*r, b, c, d);
    }
    roots
}

/// Remaining root of `x³ + b x² + c x + d` given its double root: from the
/// product of the roots when that is well conditioned, else from their sum.
fn simple_from_double(double: C64, b: C64, d: C64) -> C64 {
    if double.norm_sqr() > 1e-8 * b.norm_sqr() {
        -d / (double * double)
    } else {
        -b - double * 2.0
    }
}

fn newton_polish(x0: C64, b: C64, c: C64, d: C64) -> C64 {
    let mut x = x0;
    for _ in 0..2 {
        let f = ((x + b) * x + c) * x + d;
        let df = (x * 3.0 + b * 2.0) * x + c;
        if df.norm() == 0.0 {
            break;
        }
        let nx = x - f / df;
        let fx = ((nx + b) * nx + c) * nx + d;
        if fx.norm() < f.norm() {
            x = nx;
        } else {
            break;
        }
    }
    x
}

/// Characteristic polynomial coefficients `(b, c, d)` of a 3x3 matrix so that
/// `det(λI - M) = λ³ + bλ² + cλ + d`.
pub fn char_poly<T: Scalar>(m: &Matrix3<T>) -> (T, T, T) {
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    (-trace(m), minors, -det(m))
}

fn sort_desc(mut roots: [C64; 3]) -> [C64; 3] {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    roots
}

fn check_symmetric<T: Scalar>(m: &Matrix3<T>) -> Result<f64> {
    let n = m.norm();
    let asym = (m - m.transpose()).norm();
    if asym > 1e-10 * n {
        return Err(Error::NotSymmetric(asym / n));
    }
    Ok(n)
}

/// Eigenvalues of a real symmetric matrix, descending, by the trigonometric
/// form of the cubic solution.
pub fn eig_sym3(m: &Mat3) -> Result<[f64; 3]> {
    let n = check_symmetric(m)?;
    let (b, c, d) = char_poly(m);
    let third = 1.0 / 3.0;
    let p = c - b * b * third;
    let q = b * b * b * (2.0 / 27.0) - b * c * third + d;
    let shift = -b * third;
    let eps = f64::EPSILON;
    let err_p = 8.0 * eps * n * n + 2.0 * b.abs() * 4.0 * eps * n * third + eps * p.abs();
    let err_q = (2.0 / 9.0) * b * b * 4.0 * eps * n
        + (c.abs() * 4.0 * eps * n + b.abs() * 8.0 * eps * n * n) * third
        + 16.0 * eps * n.powi(3)
        + eps * q.abs();
    let disc = q * q * 0.25 + p * p * p / 27.0;
    let noise = 16.0 * (0.5 * q.abs() * err_q + p * p / 9.0 * err_p);

    let mut roots = if p >= -16.0 * err_p {
        [shift; 3]
    } else if disc.abs() <= noise {
        let double = -1.5 * q / p + shift;
        let simple = simple_from_double(C64::new(double, 0.0), C64::new(b, 0.0), C64::new(d, 0.0)).re;
        [simple, double, double]
    } else {
        let r = (-p * third).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() * third;
        let tau = 2.0 * std::f64::consts::PI * third;
        [
            2.0 * r * theta.cos() + shift,
            2.0 * r * (theta - tau).cos() + shift,
            2.0 * r * (theta + tau).cos() + shift,
        ]
    };
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots)
}

/// Eigenvalues of a bilinear-symmetric complex matrix (`M = Mᵀ`), via the
/// complex Cardano formula on the characteristic cubic. Ordered by
/// descending real part, ties by descending imaginary part.
pub fn eig_sym3_complex(m: &CMat3) -> Result<[C64; 3]> {
    let n = check_symmetric(m)?;
    let (b, c, d) = char_poly(m);
    Ok(sort_desc(solve_cubic(b, c, d, n)))
}

/// Unit right null vector (up to scale) of a rank-deficient matrix, from the
/// right singular vector of the smallest singular value. Returns the vector
/// and `σ3 / σ1`.
pub fn right_null_vector<T: Scalar>(m: &Matrix3<T>) -> (Vector3<T>, f64, f64) {
    let d = svd(&DMatrix::from_column_slice(3, 3, m.as_slice()));
    let v = Vector3::from_fn(|i, _| d.v[(i, 2)]);
    let s1 = d.s[0];
    let r2 = if s1 > 0.0 { d.s[1] / s1 } else { 0.0 };
    let r3 = if s1 > 0.0 { d.s[2] / s1 } else { 0.0 };
    (v, r2, r3)
}

/// Scales `v` to unit norm and rotates its phase so that the
/// largest-modulus component is real and positive.
pub fn sign_canonical<T: Scalar>(v: &Vector3<T>) -> Vector3<T> {
    let n = v.norm();
    if n == 0.0 {
        return *v;
    }
    let mut k = 0;
    for i in 1..3 {
        if v[i].modulus() > v[k].modulus() {
            k = i;
        }
    }
    let phase = v[k] / T::from_real(v[k].modulus());
    v.map(|z| z / phase / T::from_real(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::Rng;

    #[test]
    fn skew_of_e3() {
        let s = skew(&Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(s, Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn skew_matches_cross_product() {
        let mut rng = sampling::rng(1);
        for _ in 0..100 {
            let v = sampling::normal_vec3(&mut rng);
            let b = sampling::normal_vec3(&mut rng);
            let lhs = skew(&v) * b;
            // independent oracle: nalgebra's cross product
            assert!((lhs - v.cross(&b)).norm() <= 1e-14 * (1.0 + v.norm() * b.norm()));
            assert_eq!(skew(&v).transpose(), -skew(&v));
        }
    }

    #[test]
    fn cofactor_of_identity_and_adjugate_relation() {
        assert_eq!(cofactor(&Mat3::identity()), Mat3::identity());
        let m = Mat3::new(2.0, 1.0, 0.0, -1.0, 3.0, 4.0, 0.5, 0.0, 1.0);
        let adj = cofactor(&m).transpose();
        assert!((m * adj - Mat3::identity() * det(&m)).norm() < 1e-12);
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let s = svd3(&Mat3::identity());
        assert_eq!(s.sigma, [1.0, 1.0, 1.0]);
        assert!((s.reconstruct() - Mat3::identity()).norm() < 1e-15);
        let d = svd3(&Mat3::from_diagonal(&Vec3::new(3.0, 2.0, 1.0)));
        for (a, b) in d.sigma.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    fn check_svd<T: Scalar>(m: &DMatrix<T>) {
        let d = svd(m);
        let k = m.nrows().min(m.ncols());
        assert_eq!(d.s.len(), k);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        assert!((d.reconstruct() - m).norm() <= 1e-13 * m.norm().max(1.0));
        assert!((d.v.adjoint() * &d.v - DMatrix::identity(k, k)).norm() <= 1e-13);
        let kept: Vec<usize> = (0..k).filter(|&i| d.s[i] > 1e-12 * d.s[0]).collect();
        for &i in &kept {
            for &j in &kept {
                let dot = d.u.column(i).dotc(&d.u.column(j)).modulus();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_svd_on_clustered_spectra() {
        let mut rng = sampling::rng(17);
        for _ in 0..300 {
            // Camera-block system: eleven unit singular values and a 3-dim null space.
            let a2 = sampling::normal_vec3(&mut rng).normalize();
            let a3 = sampling::normal_vec3(&mut rng).normalize();
            let mut m = DMatrix::<f64>::zeros(27, 18);
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        m[(9 * k + 3 * i + j, 3 * i + k)] += a3[j];
                        m[(9 * k + 3 * i + j, 9 + 3 * j + k)] -= a2[i];
                    }
                }
            }
            check_svd(&m);
            assert!(svd(&m).s[15] <= 1e-14);
        }
    }

    #[test]
    fn jacobi_svd_shapes_and_fields() {
        let mut rng = sampling::rng(18);
        for (r, n) in [(3, 3), (2, 3), (3, 9), (9, 3), (40, 27), (1, 1)] {
            check_svd(&DMatrix::from_fn(r, n, |_, _| sampling::normal(&mut rng)));
            check_svd(&DMatrix::from_fn(r, n, |_, _| sampling::normal_c64(&mut rng)));
        }
        check_svd(&DMatrix::<f64>::identity(5, 5));
        check_svd(&DMatrix::<f64>::zeros(4, 2));
        let d = svd(&DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 3.0, 0.0]));
        assert_eq!(d.s, vec![3.0, 2.0]);
    }

    #[test]
    fn min_norm_solve() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let x = svd(&m).solve(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 5.0]), 1e-12);
        assert!((x - nalgebra::DVector::from_vec(vec![1.0, 1.0])).norm() <= 1e-14);
    }

    #[test]
    fn svd_round_trip_with_proper_rotations() {
        let mut rng = sampling::rng(2);
        for _ in 0..10_000 {
            let m = sampling::normal_mat3(&mut rng);
            let s = svd3(&m);
            assert!((s.reconstruct() - m).norm() <= 1e-12 * m.norm());
            assert!((s.u.matrix().determinant() - 1.0).abs() < 1e-12);
            assert!((s.v.matrix().determinant() - 1.0).abs() < 1e-12);
            assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2].abs());
            assert!(s.sigma[1] >= 0.0);
            assert_eq!(s.sigma[2] < 0.0, m.determinant() < 0.0);
        }
    }

    #[test]
    fn householder_aligned_and_axis() {
        let (h, g) = householder_to_e3(&Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(*h.matrix(), Mat3::identity());
        assert_eq!(g, 5.0);
        let (h, g) = householder_to_e3(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((h.matrix() * Vec3::x() - Vec3::new(0.0, 0.0, g)).norm() < 1e-15);
        assert!(householder_to_e3(&Vec3::zeros()).is_err());
        let (h, _) = householder_to_e3(&Vec3::new(0.0, 0.0, -2.0)).unwrap();
        assert!((h.matrix() * Vec3::new(0.0, 0.0, -2.0) - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn householder_random_vectors() {
        let mut rng = sampling::rng(3);
        for _ in 0..1000 {
            let a = sampling::normal_vec3(&mut rng) * rng.random_range(0.01..100.0);
            let (h, g) = householder_to_e3(&a).unwrap();
            let img = h.matrix() * a;
            assert!((img - Vec3::new(0.0, 0.0, a.norm())).norm() < 1e-13 * a.norm());
            assert!((g - a.norm()).abs() < 1e-13 * a.norm());
            assert!(Rotation3::new(*h.matrix()).is_ok());
        }
    }

    #[test]
    fn isotropic_rotation_examples() {
        let s1 = CVec3::new(c(1.0, 0.0), I, c(0.0, 0.0));
        let r = isotropic_rotation(&s1, &s1).unwrap();
        assert!((r.matrix() * s1 - s1).norm() < 1e-14);

        let s2 = s1 * c(2.0, 0.0);
        let r = isotropic_rotation(&s1, &s2).unwrap();
        assert!((r.matrix() * s1 - s2).norm() < 1e-12);
        assert!(CRotation3::new(*r.matrix()).is_ok());

        let s3 = CVec3::new(c(0.0, 0.0), c(1.0, 0.0), I);
        let r = isotropic_rotation(&s1, &s3).unwrap();
        assert!((r.matrix() * s1 - s3).norm() < 1e-12);
        assert!((det(r.matrix()) - c(1.0, 0.0)).norm() < 1e-12);

        let bad = CVec3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(isotropic_rotation(&bad, &s1), Err(Error::NotIsotropic(_))));
    }

    #[test]
    fn isotropic_rotation_random_pairs() {
        let mut rng = sampling::rng(4);
        for _ in 0..1000 {
            let s1 = sampling::isotropic_vector(&mut rng);
            let s2 = sampling::isotropic_vector(&mut rng);
            let r = isotropic_rotation(&s1, &s2).unwrap();
            assert!((r.matrix() * s1 - s2).norm() <= 1e-9 * s2.norm());
            let n2 = r.matrix().norm_squared();
            assert!(r.orthogonality_error() <= 1e-9 * n2, "{}", r.orthogonality_error());
            assert!((det(r.matrix()) - c(1.0, 0.0)).norm() <= 1e-9 * n2);
        }
    }

    #[test]
    fn eig_sym3_diagonal_and_counterexample() {
        let e = eig_sym3(&Mat3::from_diagonal(&Vec3::new(0.0, 1.0, 1.0))).unwrap();
        assert_eq!(e, [1.0, 1.0, 0.0]);
        let s = CMat3::new(c(2.0, 0.0), I, c(0.0, 0.0), I, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let ev = eig_sym3_complex(&(s * s.transpose())).unwrap();
        let want = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).norm() <= 1e-12, "{ev:?}");
        }
        assert!(eig_sym3(&Mat3::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn eig_sym3_matches_jacobi_oracle() {
        let mut rng = sampling::rng(5);
        for _ in 0..2000 {
            let a = sampling::normal_mat3(&mut rng);
            let m = a + a.transpose();
            let ours = eig_sym3(&m).unwrap();
            let mut oracle: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            oracle.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in ours.iter().zip(&oracle) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + m.norm()), "{ours:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn eig_sym3_complex_matches_schur_oracle() {
        let mut rng = sampling::rng(6);
        for _ in 0..2000 {
            let a = sampling::normal_cmat3(&mut rng);
            let m = a + a.transpose();
            let ours = eig_sym3_complex(&m).unwrap();
            let schur = m.schur();
            let (_, t) = schur.unpack();
            let mut oracle: Vec<C64> = (0..3).map(|i| t[(i, i)]).collect();
            for x in ours {
                let best = oracle
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - x).norm().total_cmp(&(b.1 - x).norm()))
                    .map(|(i, _)| i)
                    .unwrap();
                assert!((oracle[best] - x).norm() <= 1e-9 * (1.0 + m.norm()), "{ours:?} vs {oracle:?}");
                oracle.remove(best);
            }
        }
    }

    #[test]
    fn cubic_triple_and_double_roots() {
        // (x - 2)^3
        let r = solve_cubic(c(-6.0, 0.0), c(12.0, 0.0), c(-8.0, 0.0), 6.0);
        for x in r {
            assert!((x - c(2.0, 0.0)).norm() < 1e-12);
        }
        // x (x - 1)^2
        let r = sort_desc(solve_cubic(c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), 2.0));
        assert_eq!(r, [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn sign_canonical_makes_largest_component_positive() {
        let v = sign_canonical(&Vec3::new(0.1, -3.0, 0.2));
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(v[1] > 0.0);
    }
}
