//! Polynomial constraints satisfied by calibrated trifocal tensors.
//!
//! Everything is expressed through the six symmetric matrices
//! `U_k = T_k T_kᵀ` and `V_k = T_k T_{k+1}ᵀ + T_{k+1} T_kᵀ` (indices mod 3).
//! Families that come in cyclic triples are ordered: base relation, then the
//! relation after relabelling `1 → 2 → 3 → 1` once, then twice.

use nalgebra::{DMatrix, Matrix3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{svd, trace, Scalar};
use crate::tensor::{epipolar_residuals, extended_rank_coeffs, TrifocalTensor};
use crate::tolerance::{Tolerances, Verdict};

/// `U1, U2, U3` and `V1, V2, V3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricPairs<T: Scalar> {
    pub u: [Matrix3<T>; 3],
    pub v: [Matrix3<T>; 3],
}

pub fn build_uv<T: Scalar>(t: &TrifocalTensor<T>) -> SymmetricPairs<T> {
    let s = &t.slices;
    let u = [0, 1, 2].map(|k| s[k] * s[k].transpose());
    let v = [0, 1, 2].map(|k| {
        let n = (k + 1) % 3;
        let p = s[k] * s[n].transpose();
        p + p.transpose()
    });
    SymmetricPairs { u, v }
}

/// `ψ(X, Y) = tr X tr Y - 2 tr(XY)`.
pub fn psi<T: Scalar>(x: &Matrix3<T>, y: &Matrix3<T>) -> T {
    trace(x) * trace(y) - trace(&(x * y)) * T::from_real(2.0)
}

/// `Ψ(X, Y) = (tr X I - 2X)(tr Y I - 2Y)`.
pub fn big_psi<T: Scalar>(x: &Matrix3<T>, y: &Matrix3<T>) -> Matrix3<T> {
    let two = T::from_real(2.0);
    (Matrix3::identity() * trace(x) - x * two) * (Matrix3::identity() * trace(y) - y * two)
}

fn big_psi1<T: Scalar>(x: &Matrix3<T>) -> Matrix3<T> {
    big_psi(x, x)
}

fn big_psi2<T: Scalar>(x: &Matrix3<T>, y: &Matrix3<T>) -> Matrix3<T> {
    big_psi(x, y) + big_psi(y, x)
}

fn cyclic_images<T: Scalar>(t: &TrifocalTensor<T>) -> [TrifocalTensor<T>; 3] {
    let once = t.cycled();
    let twice = once.cycled();
    [*t, once, twice]
}

fn eigen_base<T: Scalar>(p: &SymmetricPairs<T>) -> [T; 3] {
    let [u1, u2, u3] = &p.u;
    let [v1, v2, v3] = &p.v;
    let u31 = u3 - u1;
    [
        psi(&u31, &u31) - psi(v3, v3),
        psi(&u31, v1) + psi(v2, v3),
        psi(&(u1 - u2), v1),
    ]
}

fn six_base<T: Scalar>(p: &SymmetricPairs<T>) -> [T; 2] {
    let [u1, u2, u3] = &p.u;
    let [v1, v2, v3] = &p.v;
    let two = T::from_real(2.0);
    let u31 = u3 - u1;
    let tr_u2 = trace(u2);
    let tr_v3 = trace(v3);
    [
        tr_u2 * tr_u2 - tr_v3 * tr_v3 - trace(&(u2 * u2 - v3 * v3 + u31 * u31)),
        trace(v2) * trace(&(u1 - u2 * two - u3)) - trace(v1) * trace(v3) + trace(&(v2 * u2)) * two,
    ]
}

/// The nine eigenvalue quartics.
pub fn eigenvalue_quartics<T: Scalar>(t: &TrifocalTensor<T>) -> [T; 9] {
    let mut out = [T::zero(); 9];
    for (c, img) in cyclic_images(t).iter().enumerate() {
        let b = eigen_base(&build_uv(img));
        out[3 * c..3 * c + 3].copy_from_slice(&b);
    }
    out
}

/// The six further quartics.
pub fn six_quartics<T: Scalar>(t: &TrifocalTensor<T>) -> [T; 6] {
    let mut out = [T::zero(); 6];
    for (c, img) in cyclic_images(t).iter().enumerate() {
        let b = six_base(&build_uv(img));
        out[2 * c..2 * c + 2].copy_from_slice(&b);
    }
    out
}

/// `p1, ..., p15`: the eigenvalue quartics followed by the six further quartics.
pub fn quartics15<T: Scalar>(t: &TrifocalTensor<T>) -> [T; 15] {
    let mut out = [T::zero(); 15];
    out[..9].copy_from_slice(&eigenvalue_quartics(t));
    out[9..].copy_from_slice(&six_quartics(t));
    out
}

/// The four quintic matrix relations for the base labelling.
fn quintic_base<T: Scalar>(t: &TrifocalTensor<T>) -> [Matrix3<T>; 4] {
    let p = build_uv(t);
    let [u1, _, u3] = &p.u;
    let [v1, v2, v3] = &p.v;
    let [t1, t2, t3] = &t.slices;
    let u13 = u1 - u3;
    let a = big_psi1(&u13) - big_psi1(v3);
    let b = big_psi2(&u13, v3);
    let c = big_psi2(&u13, v2) + big_psi2(v1, v3);
    let d = big_psi2(&u13, v1) - big_psi2(v2, v3);
    [
        a * t1 - b * t3,
        b * t1 + a * t3,
        c * t1 + b * t2 + d * t3,
        d * t1 + a * t2 - c * t3,
    ]
}

/// All twelve quintic matrix relations, indexed `[cycle][relation]`.
pub fn quintic_blocks<T: Scalar>(t: &TrifocalTensor<T>) -> [[Matrix3<T>; 4]; 3] {
    cyclic_images(t).map(|img| quintic_base(&img))
}

fn push_row_major<T: Scalar>(out: &mut Vec<T>, m: &Matrix3<T>) {
    for i in 0..3 {
        for j in 0..3 {
            out.push(m[(i, j)]);
        }
    }
}

/// The 108 raw quintic scalars: cycle, then relation, then 9 entries row-major.
pub fn quintics108<T: Scalar>(t: &TrifocalTensor<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(108);
    for blocks in quintic_blocks(t) {
        for m in &blocks {
            push_row_major(&mut out, m);
        }
    }
    out
}

/// The 99 independent quintics: [`quintics108`] without the third relation
/// of the twice-cycled labelling, which is minus the sum of the other two
/// copies of that relation.
pub fn quintics99<T: Scalar>(t: &TrifocalTensor<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(99);
    for (c, blocks) in quintic_blocks(t).iter().enumerate() {
        for (r, m) in blocks.iter().enumerate() {
            if c == 2 && r == 2 {
                continue;
            }
            push_row_major(&mut out, m);
        }
    }
    out
}

/// Sum of the three cyclic copies of the third quintic relation, which
/// vanishes identically.
pub fn quintic_dependency_residual<T: Scalar>(t: &TrifocalTensor<T>) -> Matrix3<T> {
    let b = quintic_blocks(t);
    b[0][2] + b[1][2] + b[2][2]
}

/// Monomials of `φ(αT1 + βT2 + γT3)` after reducing `γ² = -α² - β²`.
pub const PHI_MONOMIALS: [[usize; 3]; 9] = [
    [4, 0, 0],
    [3, 1, 0],
    [3, 0, 1],
    [2, 2, 0],
    [2, 1, 1],
    [1, 3, 0],
    [1, 2, 1],
    [0, 4, 0],
    [0, 3, 1],
];

/// Coefficients of `φ(S_T)` in [`PHI_MONOMIALS`] order on the cone
/// `α² + β² + γ² = 0`, by exact expansion of
/// `S Sᵀ = α²U1 + β²U2 + γ²U3 + αβV1 + βγV2 + γαV3`.
pub fn coefficient_extraction<T: Scalar>(t: &TrifocalTensor<T>) -> [T; 9] {
    let p = build_uv(t);
    let mats = [p.u[0], p.u[1], p.u[2], p.v[0], p.v[1], p.v[2]];
    // exponents of α², β², γ², αβ, βγ, γα
    let exps: [[usize; 3]; 6] = [[2, 0, 0], [0, 2, 0], [0, 0, 2], [1, 1, 0], [0, 1, 1], [1, 0, 1]];
    let mut poly = [[[T::zero(); 5]; 5]; 5];
    for i in 0..6 {
        for j in 0..6 {
            let c = psi(&mats[i], &mats[j]);
            let e = [exps[i][0] + exps[j][0], exps[i][1] + exps[j][1], exps[i][2] + exps[j][2]];
            poly[e[0]][e[1]][e[2]] += c;
        }
    }
    for g in (2..=4).rev() {
        for a in 0..=(4 - g) {
            let b = 4 - g - a;
            let c = poly[a][b][g];
            if c == T::zero() {
                continue;
            }
            poly[a][b][g] = T::zero();
            poly[a + 2][b][g - 2] -= c;
            poly[a][b + 2][g - 2] -= c;
        }
    }
    PHI_MONOMIALS.map(|[a, b, g]| poly[a][b][g])
}

/// Constraint families with an independence claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Eigenvalue,
    SixQuartic,
    Quintic,
    QuinticRaw,
}

impl Family {
    /// Number of polynomials in the family.
    pub fn size(self) -> usize {
        match self {
            Family::Eigenvalue => 9,
            Family::SixQuartic => 6,
            Family::Quintic => 99,
            Family::QuinticRaw => 108,
        }
    }

    /// Rank the family should have as a set of polynomials.
    pub fn expected_rank(self) -> usize {
        match self {
            Family::QuinticRaw => 99,
            f => f.size(),
        }
    }

    pub fn evaluate(self, t: &TrifocalTensor<f64>) -> Vec<f64> {
        match self {
            Family::Eigenvalue => eigenvalue_quartics(t).to_vec(),
            Family::SixQuartic => six_quartics(t).to_vec(),
            Family::Quintic => quintics99(t),
            Family::QuinticRaw => quintics108(t),
        }
    }
}

/// Numerical rank of a family's evaluation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: Family,
    pub size: usize,
    pub samples: usize,
    pub rank: usize,
    pub expected_rank: usize,
    /// Singular values of the evaluation matrix relative to the largest.
    pub relative_singular_values: Vec<f64>,
    pub passes: bool,
}

/// Relative singular value threshold used to count the rank.
pub const CERTIFICATE_RANK_TOL: f64 = 1e-6;

/// Evaluates `family` at `3 · size` random tensors with integer entries in
/// `-3..=3` and returns the numerical rank of the `size × samples` matrix of
/// values.
pub fn independence_certificate<R: Rng + ?Sized>(family: Family, rng: &mut R) -> Certificate {
    let size = family.size();
    let samples = 3 * size;
    let mut m = DMatrix::<f64>::zeros(size, samples);
    for s in 0..samples {
        let t = TrifocalTensor::from_fn(|_, _, _| rng.random_range(-3..=3) as f64);
        for (r, v) in family.evaluate(&t).into_iter().enumerate() {
            m[(r, s)] = v;
        }
    }
    // Equilibrate rows so that differences in scale between polynomials do
    // not masquerade as rank deficiency.
    for r in 0..size {
        let n = m.row(r).norm();
        if n > 0.0 {
            m.row_mut(r).scale_mut(1.0 / n);
        }
    }
    let sv = svd(&m).s;
    let top = sv.first().copied().unwrap_or(0.0);
    let rel: Vec<f64> = sv.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect();
    let rank = rel.iter().filter(|&&r| r > CERTIFICATE_RANK_TOL).count();
    Certificate {
        family,
        size,
        samples,
        rank,
        expected_rank: family.expected_rank(),
        relative_singular_values: rel,
        passes: rank == family.expected_rank(),
    }
}

/// Residuals of one constraint family on a unit-norm tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub name: String,
    /// Homogeneity degree in the tensor entries.
    pub degree: u32,
    /// Signed values for real tensors, moduli for complex ones.
    pub values: Vec<f64>,
    pub max_abs: f64,
    pub norm: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl FamilyReport {
    fn from_values<T: Scalar>(name: &str, degree: u32, vals: &[T], tol: &Tolerances) -> Self {
        let values: Vec<f64> = vals
            .iter()
            .map(|z| {
                let c = z.to_c64();
                if c.im == 0.0 {
                    c.re
                } else {
                    c.norm()
                }
            })
            .collect();
        let max_abs = vals.iter().map(|z| z.modulus()).fold(0.0, f64::max);
        let norm = vals.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt();
        FamilyReport {
            name: name.to_string(),
            degree,
            values,
            max_abs,
            norm,
            verdict: Verdict::from_residual(max_abs, tol.report, tol.hysteresis),
            error: None,
        }
    }

    fn failed(name: &str, degree: u32, err: String) -> Self {
        FamilyReport {
            name: name.to_string(),
            degree,
            values: vec![],
            max_abs: f64::NAN,
            norm: f64::NAN,
            verdict: Verdict::Indeterminate,
            error: Some(err),
        }
    }
}

/// Residuals of every constraint family, evaluated on the tensor scaled to
/// unit Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub complex: bool,
    /// Frobenius norm of the input; residuals refer to the input divided by it.
    pub normalization: f64,
    pub epipolar: FamilyReport,
    pub extended_rank: FamilyReport,
    pub eigenvalue_quartic: FamilyReport,
    pub six_quartic: FamilyReport,
    pub quintic: FamilyReport,
    pub tolerances: Tolerances,
}

impl ConstraintReport {
    pub fn families(&self) -> [&FamilyReport; 5] {
        [&self.epipolar, &self.extended_rank, &self.eigenvalue_quartic, &self.six_quartic, &self.quintic]
    }

    /// Maximum absolute residual over the 15 quartics.
    pub fn max_quartic(&self) -> f64 {
        self.eigenvalue_quartic.max_abs.max(self.six_quartic.max_abs)
    }
}

pub fn constraint_report<T: Scalar>(t: &TrifocalTensor<T>, tol: &Tolerances) -> ConstraintReport {
    let (u, n) = t.normalized();
    let complex = t.slices.iter().any(|s| s.iter().any(|z| z.to_c64().im != 0.0));
    let epipolar = match epipolar_residuals(&u) {
        Ok((a, b)) => FamilyReport::from_values("epipolar", 6, &[a, b], tol),
        Err(e) => FamilyReport::failed("epipolar", 6, e.to_string()),
    };
    ConstraintReport {
        complex,
        normalization: n,
        epipolar,
        extended_rank: FamilyReport::from_values("extended_rank", 3, &extended_rank_coeffs(&u), tol),
        eigenvalue_quartic: FamilyReport::from_values("eigenvalue_quartic", 4, &eigenvalue_quartics(&u), tol),
        six_quartic: FamilyReport::from_values("six_quartic", 4, &six_quartics(&u), tol),
        quintic: FamilyReport::from_values("quintic", 5, &quintics99(&u), tol),
        tolerances: *tol,
    }
}
