//! Seeded random sampling of rotations, isotropic vectors, cameras and tensors.
//!
//! All generators take an explicit `&mut impl Rng` so that every stream is
//! reproducible from a seed.

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, CMat3, CRotation3, CVec3, Mat3, Rotation3, Vec3, C64};
use crate::tensor::CameraTriple;

/// The crate's standard deterministic generator.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for item `index` of a batch seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::from_fn(|_, _| normal(rng))
}

pub fn normal_mat3<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    Mat3::from_fn(|_, _| normal(rng))
}

pub fn normal_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(normal(rng), normal(rng))
}

pub fn normal_cvec3<R: Rng + ?Sized>(rng: &mut R) -> CVec3 {
    CVec3::from_fn(|_, _| normal_c64(rng))
}

pub fn normal_cmat3<R: Rng + ?Sized>(rng: &mut R) -> CMat3 {
    CMat3::from_fn(|_, _| normal_c64(rng))
}

/// Small-integer matrix with entries in `-range..=range`.
pub fn integer_mat3<R: Rng + ?Sized>(rng: &mut R, range: i32) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-range..=range) as f64)
}

/// Uniform rotation from a uniformly distributed unit quaternion.
pub fn rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let u3: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
    let m = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
    Rotation3::new_unchecked(m)
}

/// Rotation within `angle` radians of the identity about a random axis.
pub fn small_rotation<R: Rng + ?Sized>(rng: &mut R, angle: f64) -> Rotation3 {
    let axis = normal_vec3(rng);
    Rotation3::from_axis_angle(&axis, angle * rng.random_range(-1.0..1.0))
}

/// Element of `SO(3, C)`: a product of three rotations about random real axes
/// by complex angles with moderate imaginary parts.
pub fn complex_rotation<R: Rng + ?Sized>(rng: &mut R) -> CRotation3 {
    let mut r = CRotation3::identity();
    for _ in 0..3 {
        let axis = normal_vec3(rng);
        let angle = c(normal(rng), 0.5 * normal(rng));
        r = r.compose(&CRotation3::from_axis_complex_angle(&axis, angle));
    }
    r
}

/// Isotropic vector `κ (x + i y)` with a random orthonormal pair `x, y` and
/// a random complex scale `κ`.
pub fn isotropic_vector<R: Rng + ?Sized>(rng: &mut R) -> CVec3 {
    let q = rotation(rng);
    let x = q.matrix().column(0).into_owned();
    let y = q.matrix().column(1).into_owned();
    let mut k = normal_c64(rng);
    while k.norm() < 1e-3 {
        k = normal_c64(rng);
    }
    CVec3::from_fn(|i, _| k * c(x[i], y[i]))
}

/// Calibrated camera triple with uniform rotations and Gaussian translations.
pub fn calibrated_triple<R: Rng + ?Sized>(rng: &mut R) -> CameraTriple<f64> {
    CameraTriple::Calibrated {
        r2: rotation(rng),
        t2: normal_vec3(rng),
        r3: rotation(rng),
        t3: normal_vec3(rng),
    }
}

/// Kinds of nearly degenerate calibrated configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearDegeneracy {
    SmallBaseline,
    ParallelTranslations,
    CloseRotations,
}

/// Calibrated triple close to one of the degenerate strata, at relative
/// distance `delta`.
pub fn near_degenerate_triple<R: Rng + ?Sized>(
    rng: &mut R,
    kind: NearDegeneracy,
    delta: f64,
) -> CameraTriple<f64> {
    let r2 = rotation(rng);
    let t3 = normal_vec3(rng);
    match kind {
        NearDegeneracy::SmallBaseline => CameraTriple::Calibrated {
            r2,
            t2: normal_vec3(rng) * delta,
            r3: rotation(rng),
            t3,
        },
        NearDegeneracy::ParallelTranslations => CameraTriple::Calibrated {
            r2,
            t2: t3 * normal(rng) + normal_vec3(rng) * delta,
            r3: rotation(rng),
            t3,
        },
        NearDegeneracy::CloseRotations => CameraTriple::Calibrated {
            r2,
            t2: normal_vec3(rng),
            r3: r2.compose(&small_rotation(rng, delta)),
            t3,
        },
    }
}

/// Complex calibrated triple with rotations in `SO(3, C)`.
pub fn complex_calibrated_triple<R: Rng + ?Sized>(rng: &mut R) -> CameraTriple<C64> {
    CameraTriple::Calibrated {
        r2: complex_rotation(rng),
        t2: normal_cvec3(rng),
        r3: complex_rotation(rng),
        t3: normal_cvec3(rng),
    }
}

/// Generic projective cameras `[A | a]`, `[B | b]` with Gaussian entries.
pub fn projective_triple<R: Rng + ?Sized>(rng: &mut R) -> CameraTriple<f64> {
    CameraTriple::Projective {
        a_mat: normal_mat3(rng),
        a: normal_vec3(rng),
        b_mat: normal_mat3(rng),
        b: normal_vec3(rng),
    }
}

/// Upper triangular calibration matrix with focal lengths in `[0.8, 2]`,
/// small skew and a principal point near the origin.
pub fn calibration_matrix<R: Rng + ?Sized>(rng: &mut R) -> Mat3 {
    let fx = rng.random_range(0.8..2.0);
    let fy = fx * rng.random_range(0.9..1.1);
    let skew = rng.random_range(-0.05..0.05);
    let cx = rng.random_range(-0.2..0.2);
    let cy = rng.random_range(-0.2..0.2);
    Mat3::new(fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0)
}

/// Rank-decomposition factors `(s1, t1, t2, s2)` with isotropic `s1, s2`.
pub fn essential_factors<R: Rng + ?Sized>(rng: &mut R) -> (CVec3, CVec3, CVec3, CVec3) {
    (
        isotropic_vector(rng),
        normal_cvec3(rng),
        normal_cvec3(rng),
        isotropic_vector(rng),
    )
}
