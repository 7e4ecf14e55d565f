//! Deciding whether a real trifocal tensor is calibrated, and recovering
//! rotations and translations when it is.

use nalgebra::{DMatrix, Matrix3xX};
use serde::{Deserialize, Serialize};

use crate::canonical::{canonicalize, CanonicalTensor, CanonicalizationResult};
use crate::constraints::quartics15;
use crate::error::{Error, Result};
use crate::linalg::{nearest_rotation, svd, Mat3, Rotation3, Vec3};
use crate::tensor::{trifocal_from_cameras, CameraTriple, RealTensor};
use crate::tolerance::{Tolerances, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibrationClass {
    Calibrated,
    NotCalibrated,
    Indeterminate,
}

/// Outcome of the quartic test, with the recovered poses when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationVerdict {
    pub verdict: CalibrationClass,
    /// `p1, ..., p15` on the unit-norm tensor.
    pub residuals: [f64; 15],
    pub max_residual: f64,
    pub tolerance: f64,
    pub hysteresis: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition: Option<CalibratedDecomposition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition_error: Option<String>,
}

/// Calibrated iff the largest quartic residual of the unit-norm tensor is at
/// most `tol.calibration`, not calibrated iff it is at least
/// `tol.hysteresis · tol.calibration`, indeterminate otherwise.
pub fn is_calibrated(t: &RealTensor, tol: &Tolerances) -> CalibrationVerdict {
    let (u, _) = t.normalized();
    let residuals = quartics15(&u);
    let max_residual = if u.is_finite() { residuals.iter().map(|v| v.abs()).fold(0.0, f64::max) } else { f64::NAN };
    let verdict = match Verdict::from_residual(max_residual, tol.calibration, tol.hysteresis) {
        Verdict::Pass if t.norm() > 0.0 => CalibrationClass::Calibrated,
        Verdict::Pass | Verdict::Indeterminate => CalibrationClass::Indeterminate,
        Verdict::Fail => CalibrationClass::NotCalibrated,
    };
    CalibrationVerdict {
        verdict,
        residuals,
        max_residual,
        tolerance: tol.calibration,
        hysteresis: tol.hysteresis,
        decomposition: None,
        decomposition_error: None,
    }
}

/// [`is_calibrated`] followed by [`decompose_calibrated`] on calibrated inputs.
pub fn assess(t: &RealTensor, tol: &Tolerances) -> CalibrationVerdict {
    let mut v = is_calibrated(t, tol);
    if v.verdict == CalibrationClass::Calibrated {
        match decompose_calibrated(t, tol) {
            Ok(d) => v.decomposition = Some(d),
            Err(e) => v.decomposition_error = Some(e.to_string()),
        }
    }
    v
}

/// Which branch of the recovery produced the poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecompositionCase {
    /// `ρ3 ≠ 0` in canonical form.
    GeneralRho,
    /// `ρ3 = 0`, hence `σ1 = σ2 = 0`.
    ZeroRho,
    /// The canonical `A3` vanishes: `t2 = 0` and `R3` is free.
    ZeroA3,
    /// The stacked slices have rank one: `t2 = 0` and `R3` is free.
    ZeroSecondTranslation,
    /// The side-by-side slices have rank one: `t3 = 0` and `R2` is free.
    ZeroThirdTranslation,
}

/// Calibrated cameras `[I | 0]`, `[R2 | t2]`, `[R3 | t3]` whose tensor is
/// `T / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedDecomposition {
    pub r2: Rotation3,
    pub t2: Vec3,
    pub r3: Rotation3,
    pub t3: Vec3,
    /// `|θ|` with `A3 = θ R3` in the canonical frame; absent in the
    /// rank-one branches.
    pub theta: Option<f64>,
    /// `|T|`, the factor between the input and the rebuilt tensor.
    pub scale: f64,
    pub case: DecompositionCase,
    /// Set when one of the rotations is not determined by the tensor and
    /// was fixed to the identity.
    pub degenerate_freedom: bool,
    /// Sign chosen for the third diagonal entry of `A2`.
    pub epsilon2: f64,
    /// Phase-aligned distance between the unit-norm input and the rebuilt tensor.
    pub rebuild_error: f64,
}

impl CalibratedDecomposition {
    pub fn cameras(&self) -> CameraTriple<f64> {
        CameraTriple::Calibrated { r2: self.r2, t2: self.t2, r3: self.r3, t3: self.t3 }
    }

    pub fn tensor(&self) -> RealTensor {
        trifocal_from_cameras(&self.cameras())
    }
}

/// Relative second singular value below which the stacked slices count as rank one.
const RANK_ONE: f64 = 1e-9;

/// Rotations and translations reproducing a calibrated tensor up to scale.
///
/// The tensor is reduced to canonical form, where `A2 = diag(1, 1, ε2)` and
/// `A3` is read off the parameters; `ε2` is the sign for which
/// `A3 A3ᵀ = θ² I`. The poses are mapped back through the canonical
/// rotations. Tensors with a vanishing translation are handled before
/// canonicalization.
pub fn decompose_calibrated(t: &RealTensor, tol: &Tolerances) -> Result<CalibratedDecomposition> {
    let check = is_calibrated(t, tol);
    if check.verdict != CalibrationClass::Calibrated {
        return Err(Error::NotCalibratedInput(check.max_residual));
    }
    let (u, scale) = t.normalized();
    let mut d = if let Some(d) = zero_translation_branch(&u) {
        d
    } else {
        let c = canonicalize(&u).map_err(|e| Error::CanonicalizationFailure(e.to_string()))?;
        canonical_branch(&c, tol)?
    };
    d.scale = scale;
    d.rebuild_error = d.tensor().projective_distance(&u);
    if !(d.rebuild_error <= tol.decomposition) {
        return Err(Error::CaseResolutionFailure(format!(
            "recovered cameras rebuild the tensor with error {:e}",
            d.rebuild_error
        )));
    }
    Ok(d)
}

fn stack_rows(t: &RealTensor) -> Matrix3xX<f64> {
    Matrix3xX::from_fn(9, |i, c| t.slices[c / 3][(i, c % 3)])
}

fn zero_translation_branch(u: &RealTensor) -> Option<CalibratedDecomposition> {
    // T_k = R2 e_k t3ᵀ when t2 = 0: the slices stacked vertically have rank one.
    let vertical = stack_rows(&RealTensor { slices: u.slices.map(|s| s.transpose()) });
    let horizontal = stack_rows(u);
    for (m, second) in [(vertical, true), (horizontal, false)] {
        let d = svd(&DMatrix::from_column_slice(3, 9, m.as_slice()));
        if d.s[1] > RANK_ONE * d.s[0] {
            continue;
        }
        let dir = Vec3::new(d.u[(0, 0)], d.u[(1, 0)], d.u[(2, 0)]);
        // Column k of the product is R e_k times the translation length.
        let mut n = if second {
            Mat3::from_columns(&[u.slices[0] * dir, u.slices[1] * dir, u.slices[2] * dir])
        } else {
            Mat3::from_columns(&[
                u.slices[0].transpose() * dir,
                u.slices[1].transpose() * dir,
                u.slices[2].transpose() * dir,
            ])
        };
        let mut dir = dir;
        if n.determinant() < 0.0 {
            n = -n;
            dir = -dir;
        }
        let len = (n.norm_squared() / 3.0).sqrt();
        let r = nearest_rotation(&(n / len));
        let d = if second {
            CalibratedDecomposition {
                r2: r,
                t2: Vec3::zeros(),
                r3: Rotation3::identity(),
                t3: dir * len,
                theta: None,
                scale: 1.0,
                case: DecompositionCase::ZeroSecondTranslation,
                degenerate_freedom: true,
                epsilon2: 1.0,
                rebuild_error: 0.0,
            }
        } else {
            CalibratedDecomposition {
                r2: Rotation3::identity(),
                t2: -dir * len,
                r3: r,
                t3: Vec3::zeros(),
                theta: None,
                scale: 1.0,
                case: DecompositionCase::ZeroThirdTranslation,
                degenerate_freedom: true,
                epsilon2: 1.0,
                rebuild_error: 0.0,
            }
        };
        return Some(d);
    }
    None
}

/// `A3` of the canonical factorization for the sign `ε2`.
pub fn canonical_a3(c: &CanonicalTensor, eps2: f64) -> Mat3 {
    Mat3::new(c.nu1, c.nu2, 0.0, c.rho1, c.rho2, c.rho3, c.sigma1, c.sigma2, c.sigma3 - eps2 * c.mu2)
}

/// Largest entry of `A3 A3ᵀ - θ² I` with `θ² = tr(A3 A3ᵀ) / 3`, and `θ²`.
fn conformality_defect(a3: &Mat3) -> (f64, f64) {
    let g = a3 * a3.transpose();
    let theta2 = g.trace() / 3.0;
    let d = (g - Mat3::identity() * theta2).amax();
    (d, theta2)
}

fn canonical_branch(c: &CanonicalizationResult, tol: &Tolerances) -> Result<CalibratedDecomposition> {
    let p = &c.canonical;
    let scale = p.to_array().iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if !((p.lambda1 - p.mu2).abs() <= tol.decomposition * scale) {
        return Err(Error::CaseResolutionFailure(format!(
            "canonical singular values differ: λ1 = {:e}, μ2 = {:e}",
            p.lambda1, p.mu2
        )));
    }
    let limit = 100.0 * tol.calibration.max(tol.decomposition * tol.decomposition);
    let candidates = [1.0, -1.0].map(|e| {
        let a3 = canonical_a3(p, e);
        let (defect, theta2) = conformality_defect(&a3);
        (e, a3, defect, theta2)
    });
    let (eps2, a3, defect, theta2) = if candidates[0].2 <= candidates[1].2 { candidates[0] } else { candidates[1] };

    let a2 = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, eps2));
    let r2c = a2 * eps2;
    let t3c = Vec3::new(0.0, 0.0, eps2 * p.mu2);
    let a3_norm = a3.norm();
    let (r3c, t2c, theta, case, free) = if a3_norm <= tol.decomposition * scale {
        (Rotation3::identity(), Vec3::zeros(), Some(0.0), DecompositionCase::ZeroA3, true)
    } else {
        if !(defect <= limit * scale * scale) {
            return Err(Error::CaseResolutionFailure(format!(
                "neither sign makes A3 a scaled rotation (defects {:e}, {:e})",
                candidates[0].2, candidates[1].2
            )));
        }
        let theta = theta2.sqrt() * a3.determinant().signum();
        let case = if p.rho3.abs() > tol.decomposition * scale { DecompositionCase::GeneralRho } else { DecompositionCase::ZeroRho };
        (nearest_rotation(&(a3 / theta)), Vec3::new(0.0, 0.0, -theta), Some(theta.abs()), case, false)
    };

    let (q1, q2, q3) = (c.q1.matrix(), c.q2.matrix(), c.q3.matrix());
    Ok(CalibratedDecomposition {
        r2: nearest_rotation(&(q2.transpose() * r2c * q1)),
        t2: q2.transpose() * t2c,
        r3: nearest_rotation(&(q3.transpose() * r3c.matrix() * q1)),
        t3: q3.transpose() * t3c,
        theta,
        scale: 1.0,
        case,
        degenerate_freedom: free,
        epsilon2: eps2,
        rebuild_error: 0.0,
    })
}

/// The seven polynomials in canonical parameters that vanish on real
/// calibrated canonical tensors whenever `ρ3`-dependent factors are present.
pub fn radical_witnesses_first(c: &CanonicalTensor) -> [f64; 7] {
    let CanonicalTensor { lambda1: l1, mu2: m2, nu1: n1, nu2: n2, rho1: r1, rho2: r2, rho3: r3, sigma1: s1, sigma2: s2, sigma3: s3 } =
        *c;
    let d = l1 * l1 - m2 * m2;
    let q = r3 * r3 + s3 * s3;
    let nn = n1 * n1 + n2 * n2;
    let rs = r1 * s1 + r2 * s2;
    let ss = s1 * s1 + s2 * s2;
    [
        d * (l1 * l1 + s1 * s1),
        d * (m2 * m2 + s2 * s2),
        r3 * (n1 * s1 + n2 * s2),
        r3 * (n1 * r1 + n2 * r2),
        r3 * q * (nn - r1 * r1 - r2 * r2 - r3 * r3),
        q * (rs + r3 * (s3 + m2)) * (rs + r3 * (s3 - m2)),
        r3 * q * (nn - ss - (s3 + m2).powi(2)) * (nn - ss - (s3 - m2).powi(2)),
    ]
}

/// The five further polynomials vanishing on real calibrated canonical tensors.
pub fn radical_witnesses_second(c: &CanonicalTensor) -> [f64; 5] {
    let CanonicalTensor { lambda1: l1, mu2: m2, nu1: n1, nu2: n2, rho1: r1, rho2: r2, rho3: r3, sigma1: s1, sigma2: s2, sigma3: s3 } =
        *c;
    let d = l1 * l1 - m2 * m2;
    let c1 = n1 * n1 + r1 * r1 + s1 * s1;
    let c2 = n2 * n2 + r2 * r2 + s2 * s2;
    let ss = s1 * s1 + s2 * s2;
    [
        c1 * (ss - r3 * r3 + d),
        c2 * (ss - r3 * r3 - d),
        n1 * n2 + r1 * r2 + s1 * s2,
        c1 - c2 + d,
        (c1 - r3 * r3 - (s3 + m2).powi(2) + d) * (c1 - r3 * r3 - (s3 - m2).powi(2) - d),
    ]
}

/// Both witness families.
pub fn radical_witness_polys(c: &CanonicalTensor) -> ([f64; 7], [f64; 5]) {
    (radical_witnesses_first(c), radical_witnesses_second(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{self, NearDegeneracy};
    use crate::tensor::transform;
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn round_trip(cams: &CameraTriple<f64>) -> CalibratedDecomposition {
        let t = trifocal_from_cameras(cams);
        let v = is_calibrated(&t, &tol());
        assert_eq!(v.verdict, CalibrationClass::Calibrated, "{:e}", v.max_residual);
        let d = decompose_calibrated(&t, &tol()).unwrap();
        assert!(d.rebuild_error <= 1e-7, "{:e} {:?}", d.rebuild_error, d.case);
        assert!(d.tensor().projective_distance(&t) <= 1e-7);
        assert!((d.scale - t.norm()).abs() <= 1e-12 * t.norm());
        for r in [&d.r2, &d.r3] {
            assert!(r.orthogonality_error() <= 1e-12);
            assert!((r.matrix().determinant() - 1.0).abs() <= 1e-12);
        }
        d
    }

    #[test]
    fn random_calibrated_round_trip() {
        let mut rng = sampling::rng(91);
        for _ in 0..300 {
            round_trip(&sampling::calibrated_triple(&mut rng));
        }
    }

    #[test]
    fn near_degenerate_round_trip() {
        let mut rng = sampling::rng(92);
        for kind in [NearDegeneracy::SmallBaseline, NearDegeneracy::ParallelTranslations, NearDegeneracy::CloseRotations] {
            for delta in [1e-2, 1e-3, 1e-4] {
                for _ in 0..20 {
                    round_trip(&sampling::near_degenerate_triple(&mut rng, kind, delta));
                }
            }
        }
    }

    #[test]
    fn identity_rotations_unit_translations() {
        let cams = CameraTriple::Calibrated { r2: Rotation3::identity(), t2: Vec3::z(), r3: Rotation3::identity(), t3: Vec3::z() };
        let d = round_trip(&cams);
        let t = trifocal_from_cameras(&cams);
        assert!(d.tensor().projective_distance(&t) <= 1e-12);
    }

    #[test]
    fn zero_translations() {
        let mut rng = sampling::rng(93);
        for _ in 0..20 {
            let cams = CameraTriple::Calibrated {
                r2: sampling::rotation(&mut rng),
                t2: Vec3::zeros(),
                r3: sampling::rotation(&mut rng),
                t3: sampling::normal_vec3(&mut rng),
            };
            let d = round_trip(&cams);
            assert_eq!(d.case, DecompositionCase::ZeroSecondTranslation);
            assert!(d.degenerate_freedom);
            let cams = CameraTriple::Calibrated {
                r2: sampling::rotation(&mut rng),
                t2: sampling::normal_vec3(&mut rng),
                r3: sampling::rotation(&mut rng),
                t3: Vec3::zeros(),
            };
            let d = round_trip(&cams);
            assert_eq!(d.case, DecompositionCase::ZeroThirdTranslation);
        }
    }

    #[test]
    fn parallel_translations_and_equal_rotations() {
        let mut rng = sampling::rng(94);
        for _ in 0..50 {
            let r = sampling::rotation(&mut rng);
            let t3 = sampling::normal_vec3(&mut rng);
            round_trip(&CameraTriple::Calibrated { r2: r, t2: t3 * 2.0, r3: sampling::rotation(&mut rng), t3 });
            round_trip(&CameraTriple::Calibrated { r2: r, t2: sampling::normal_vec3(&mut rng), r3: r, t3 });
        }
    }

    #[test]
    fn uncalibrated_tensors_are_rejected() {
        let mut rng = sampling::rng(95);
        let mut rejected = 0;
        for _ in 0..300 {
            let t = trifocal_from_cameras(&sampling::projective_triple(&mut rng));
            let v = is_calibrated(&t, &tol());
            if v.verdict == CalibrationClass::NotCalibrated {
                rejected += 1;
                assert!(matches!(decompose_calibrated(&t, &tol()), Err(Error::NotCalibratedInput(_))));
            }
        }
        assert!(rejected >= 297);
    }

    #[test]
    fn remark_tensor_is_not_calibrated() {
        let t = RealTensor::new(
            Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0),
            Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
            Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0),
        );
        let v = is_calibrated(&t, &tol());
        assert_eq!(v.verdict, CalibrationClass::NotCalibrated);
        assert!(v.residuals[..9].iter().all(|r| r.abs() <= 1e-15));
        assert!(crate::constraints::eigenvalue_quartics(&t).iter().all(|r| *r == 0.0));
    }

    #[test]
    fn uncalibrating_with_intrinsics_breaks_the_test() {
        let mut rng = sampling::rng(96);
        for _ in 0..50 {
            let t_hat = trifocal_from_cameras(&sampling::calibrated_triple(&mut rng));
            let ks = [0, 1, 2].map(|_| sampling::calibration_matrix(&mut rng));
            let t = crate::tensor::uncalibrate(&t_hat, &ks[0], &ks[1], &ks[2]).unwrap();
            assert_eq!(is_calibrated(&t, &tol()).verdict, CalibrationClass::NotCalibrated);
            let back = crate::tensor::calibrate(&t, &ks[0], &ks[1], &ks[2]).unwrap();
            assert_eq!(is_calibrated(&back, &tol()).verdict, CalibrationClass::Calibrated);
        }
    }

    #[test]
    fn indeterminate_band() {
        let mut rng = sampling::rng(97);
        let t = trifocal_from_cameras(&sampling::calibrated_triple(&mut rng)).normalized().0;
        let noise = RealTensor::from_fn(|_, _, _| sampling::normal(&mut rng));
        // Quartic residuals grow linearly in a small perturbation.
        let probe = is_calibrated(&(t + noise.scale(1e-6)), &tol()).max_residual / 1e-6;
        let eps = 3e-8 / probe;
        let v = is_calibrated(&(t + noise.scale(eps)), &tol());
        assert_eq!(v.verdict, CalibrationClass::Indeterminate, "{:e}", v.max_residual);
        assert!(matches!(decompose_calibrated(&(t + noise.scale(eps)), &tol()), Err(Error::NotCalibratedInput(_))));
        assert_eq!(is_calibrated(&RealTensor::zeros(), &tol()).verdict, CalibrationClass::Indeterminate);
    }

    #[test]
    fn witnesses_vanish_on_calibrated_canonical_tensors() {
        let mut rng = sampling::rng(98);
        for _ in 0..300 {
            let t = trifocal_from_cameras(&sampling::calibrated_triple(&mut rng)).normalized().0;
            let c = canonicalize(&t).unwrap().canonical;
            let (a, b) = radical_witness_polys(&c);
            assert!(a.iter().chain(b.iter()).all(|v| v.abs() <= 1e-8), "{a:?} {b:?}");
        }
        let (a, b) = radical_witness_polys(&CanonicalTensor::default());
        assert!(a.iter().chain(b.iter()).all(|v| *v == 0.0));
        let c = CanonicalTensor::from_array([0.0; 10].map(|_| rng.random_range(-1.0..1.0)));
        let (a, b) = radical_witness_polys(&c);
        assert!(a.iter().chain(b.iter()).filter(|v| v.abs() > 1e-6).count() >= 10);
    }

    #[test]
    fn decomposition_commutes_with_view_rotations() {
        let mut rng = sampling::rng(99);
        for _ in 0..50 {
            let t = trifocal_from_cameras(&sampling::calibrated_triple(&mut rng));
            let q = [0, 1, 2].map(|_| sampling::rotation(&mut rng));
            let moved = transform(&t, &q[0], &q[1], &q[2]);
            let d = decompose_calibrated(&moved, &tol()).unwrap();
            assert!(d.rebuild_error <= 1e-7);
        }
    }
}
