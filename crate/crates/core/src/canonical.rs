//! Reduction of a real trifocal tensor to a ten-parameter canonical form by
//! rotations of the three views.
//!
//! The canonical slices are
//!
//! ```text
//! T'1 = [0  0  λ1]   T'2 = [0  0  0 ]   T'3 = [0  0  0 ]
//!       [0  0  0 ]         [0  0  μ2]         [0  0  0 ]
//!       [ν1 ρ1 σ1]         [ν2 ρ2 σ2]         [0  ρ3 σ3]
//! ```

use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_to_e3, svd, Mat3, Rotation3, Vec3};
use crate::tensor::{epipoles, transform, EpipolePair, RealTensor};

/// The ten surviving entries of a canonical tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CanonicalTensor {
    pub lambda1: f64,
    pub mu2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

/// `(slice, row, col)` of the 17 entries that vanish in canonical form.
pub const PATTERN_ZEROS: [(usize, usize, usize); 17] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 1, 0),
    (0, 1, 1),
    (0, 1, 2),
    (1, 0, 0),
    (1, 0, 1),
    (1, 0, 2),
    (1, 1, 0),
    (1, 1, 1),
    (2, 0, 0),
    (2, 0, 1),
    (2, 0, 2),
    (2, 1, 0),
    (2, 1, 1),
    (2, 1, 2),
    (2, 2, 0),
];

impl CanonicalTensor {
    /// Reads the ten parameters off a tensor, ignoring the pattern entries.
    pub fn from_tensor(t: &RealTensor) -> Self {
        let s = &t.slices;
        CanonicalTensor {
            lambda1: s[0][(0, 2)],
            mu2: s[1][(1, 2)],
            nu1: s[0][(2, 0)],
            nu2: s[1][(2, 0)],
            rho1: s[0][(2, 1)],
            rho2: s[1][(2, 1)],
            rho3: s[2][(2, 1)],
            sigma1: s[0][(2, 2)],
            sigma2: s[1][(2, 2)],
            sigma3: s[2][(2, 2)],
        }
    }

    /// Parameters in the order `λ1, ν1, ρ1, σ1, μ2, ν2, ρ2, σ2, ρ3, σ3`.
    pub fn to_array(&self) -> [f64; 10] {
        [
            self.lambda1, self.nu1, self.rho1, self.sigma1, self.mu2, self.nu2, self.rho2, self.sigma2, self.rho3,
            self.sigma3,
        ]
    }

    /// Inverse of [`CanonicalTensor::to_array`].
    pub fn from_array(p: [f64; 10]) -> Self {
        CanonicalTensor {
            lambda1: p[0],
            nu1: p[1],
            rho1: p[2],
            sigma1: p[3],
            mu2: p[4],
            nu2: p[5],
            rho2: p[6],
            sigma2: p[7],
            rho3: p[8],
            sigma3: p[9],
        }
    }

    pub fn tensor(&self) -> RealTensor {
        let c = self;
        RealTensor::new(
            Mat3::new(0.0, 0.0, c.lambda1, 0.0, 0.0, 0.0, c.nu1, c.rho1, c.sigma1),
            Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, c.mu2, c.nu2, c.rho2, c.sigma2),
            Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, c.rho3, c.sigma3),
        )
    }
}

/// Largest pattern-zero entry relative to `|T|`.
pub fn pattern_residual(t: &RealTensor) -> f64 {
    let n = t.norm();
    let worst = PATTERN_ZEROS.iter().map(|&(k, i, j)| t.slices[k][(i, j)].abs()).fold(0.0, f64::max);
    if n > 0.0 {
        worst / n
    } else {
        0.0
    }
}

/// True iff the 17 pattern-zero entries are all at most `tol · |T|`.
pub fn is_canonical_pattern(t: &RealTensor, tol: f64) -> bool {
    let n = t.norm();
    PATTERN_ZEROS.iter().all(|&(k, i, j)| t.slices[k][(i, j)].abs() <= tol * n)
}

/// Rotations and intermediate factors of a canonicalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalizationResult {
    pub canonical: CanonicalTensor,
    pub q1: Rotation3,
    pub q2: Rotation3,
    pub q3: Rotation3,
    pub epipoles: EpipolePair,
    #[serde(with = "crate::rows")]
    pub h2: Mat3,
    #[serde(with = "crate::rows")]
    pub h3: Mat3,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Rotation `U` of the SVD of `γ3 B2`, row-major.
    pub u: [[f64; 2]; 2],
    #[serde(with = "crate::rows")]
    pub v: Mat3,
    /// Rotation `W` aligning the third column of `B3 V`, row-major.
    pub w: [[f64; 2]; 2],
    /// `λ1 - μ2`, the gap between the two singular values of `γ3 B2`.
    pub sigma_gap: f64,
    /// [`pattern_residual`] of the transformed tensor.
    pub pattern_residual: f64,
}

impl CanonicalizationResult {
    /// The tensor obtained by applying the rotations to the input.
    pub fn canonical_tensor(&self) -> RealTensor {
        self.canonical.tensor()
    }
}

/// Above this relative pattern residual the input is not treated as a trifocal tensor.
pub const PATTERN_FAILURE: f64 = 1e-6;

/// Blocks `(A2, A3)` with `T_k = A2 e_k a3ᵀ - a2 e_kᵀ A3ᵀ` for the given
/// epipoles. The solution is determined up to `A_v ↦ A_v + a_v wᵀ`; the
/// minimum-norm one is returned.
pub fn camera_blocks(t: &RealTensor, ep: &EpipolePair) -> (Mat3, Mat3) {
    let (a2, a3) = (ep.a2, ep.a3);
    let mut m = DMatrix::<f64>::zeros(27, 18);
    let mut rhs = DVector::<f64>::zeros(27);
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let row = 9 * k + 3 * i + j;
                m[(row, 3 * i + k)] += a3[j];
                m[(row, 9 + 3 * j + k)] -= a2[i];
                rhs[row] = t.slices[k][(i, j)];
            }
        }
    }
    let d = svd(&m);
    let x = d.solve(&rhs, 1e-12 * d.s[0]);
    let a2m = Mat3::from_fn(|i, j| x[3 * i + j]);
    let a3m = Mat3::from_fn(|i, j| x[9 + 3 * i + j]);
    (a2m, a3m)
}

/// Canonical form of a real trifocal tensor.
///
/// Fails with `RankDeficientSlice` or `AmbiguousEpipole` when the epipoles
/// are undefined, `DegenerateSvd` when `γ3 B2 = 0`, and
/// `CanonicalizationFailure` when the input is far from a trifocal tensor.
pub fn canonicalize(t: &RealTensor) -> Result<CanonicalizationResult> {
    let ep = robust_epipoles(t)?;
    let (a2m, a3m) = camera_blocks(t, &ep);
    canonicalize_with_blocks(t, &ep, &a2m, &a3m)
}

/// Epipoles of `t`, retrying on a fixed mix of the slices when one slice is
/// rank deficient. Mixing the slices leaves the epipoles unchanged, and the
/// canonical form itself always has a rank-one third slice.
pub fn robust_epipoles(t: &RealTensor) -> Result<EpipolePair> {
    match epipoles(t) {
        Err(Error::RankDeficientSlice { .. }) if t.norm() > 0.0 => {
            let mix = Rotation3::from_axis_angle(&Vec3::new(1.0, 2.0, 3.0).normalize(), 1.0);
            let mixed = transform(t, &mix, &Rotation3::identity(), &Rotation3::identity());
            epipoles(&mixed).or_else(|_| epipoles(t))
        }
        other => other,
    }
}

/// [`canonicalize`] with the camera blocks supplied by the caller.
pub fn canonicalize_with_blocks(t: &RealTensor, ep: &EpipolePair, a2m: &Mat3, a3m: &Mat3) -> Result<CanonicalizationResult> {
    let (h2, gamma2) = householder_to_e3(&ep.a2)?;
    let (h3, gamma3) = householder_to_e3(&ep.a3)?;
    let ha2 = h2.matrix() * a2m;
    let ha3 = h3.matrix() * a3m;
    let b2 = Matrix2x3::from_fn(|i, j| ha2[(i, j)]);
    let b3 = Matrix2x3::from_fn(|i, j| ha3[(i, j)]);

    let (u, v, lambda1, mu2) = svd_2x3(&(b2 * gamma3))?;
    let c = b3 * v.column(2);
    let cn = c.norm();
    let w = if cn > 0.0 {
        Matrix2::new(c[1], -c[0], c[0], c[1]) / cn
    } else {
        Matrix2::identity()
    };

    let embed = |m: &Matrix2<f64>| Mat3::new(m[(0, 0)], m[(0, 1)], 0.0, m[(1, 0)], m[(1, 1)], 0.0, 0.0, 0.0, 1.0);
    let q1 = Rotation3::new_unchecked(v.transpose());
    let q2 = Rotation3::new_unchecked(embed(&u.transpose()) * h2.matrix());
    let q3 = Rotation3::new_unchecked(embed(&w) * h3.matrix());
    let tc = transform(t, &q1, &q2, &q3);
    let residual = pattern_residual(&tc);
    if !(residual <= PATTERN_FAILURE) {
        return Err(Error::CanonicalizationFailure(format!(
            "input is not a trifocal tensor (pattern residual {residual:e})"
        )));
    }
    let row = |m: &Matrix2<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
    Ok(CanonicalizationResult {
        canonical: CanonicalTensor::from_tensor(&tc),
        q1,
        q2,
        q3,
        epipoles: *ep,
        h2: *h2.matrix(),
        h3: *h3.matrix(),
        gamma2,
        gamma3,
        u: row(&u),
        v,
        w: row(&w),
        sigma_gap: lambda1 - mu2,
        pattern_residual: residual,
    })
}

/// `M = U [diag(λ1, μ2) | 0] Vᵀ` with `U ∈ SO(2)`, `V ∈ SO(3)`, `λ1 ≥ μ2 ≥ 0`.
fn svd_2x3(m: &Matrix2x3<f64>) -> Result<(Matrix2<f64>, Mat3, f64, f64)> {
    let d = svd(&DMatrix::from_row_slice(2, 3, &[m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)]]));
    let s = &d.s;
    if !(s[0] > 0.0) {
        return Err(Error::DegenerateSvd("γ3 B2 vanishes".into()));
    }
    let mut u = Matrix2::new(d.u[(0, 0)], d.u[(0, 1)], d.u[(1, 0)], d.u[(1, 1)]);
    let mut v1 = Vec3::new(d.v[(0, 0)], d.v[(1, 0)], d.v[(2, 0)]);
    // Fix the joint sign of (u1, v1): largest component of v1 positive.
    if v1[v1.iamax()] < 0.0 {
        v1 = -v1;
        u.column_mut(0).neg_mut();
    }
    let mut v2 = Vec3::new(d.v[(0, 1)], d.v[(1, 1)], d.v[(2, 1)]);
    if s[1] <= 1e-14 * s[0] {
        // v2 is arbitrary in the orthogonal complement of v1; make sure it is a unit vector there.
        let trial = if v1[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let dir = if v2.norm() > 0.5 { v2 } else { trial };
        v2 = (dir - v1 * v1.dot(&dir)).normalize();
        let u1 = u.column(0).into_owned();
        u.set_column(1, &nalgebra::Vector2::new(-u1[1], u1[0]));
    }
    if u.determinant() < 0.0 {
        u.column_mut(1).neg_mut();
        v2 = -v2;
    }
    let v3 = v1.cross(&v2);
    Ok((u, Mat3::from_columns(&[v1, v2, v3]), s[0], s[1]))
}
