//! Linear estimation of a trifocal tensor from point triples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{skew, svd, Mat3, Vec3};
use crate::tensor::{apply_homographies, TrifocalTensor};

/// Corresponding homogeneous image points in the three views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTriple {
    pub q1: Vec3,
    pub q2: Vec3,
    pub q3: Vec3,
}

/// Minimum ratio `σ26 / σ27` of the design matrix accepted as a well-posed solve.
pub const MIN_SPECTRAL_GAP: f64 = 10.0;

/// Similarity taking the points' centroid to the origin and their mean
/// distance from it to `√2`.
fn normalizing_similarity(points: impl Iterator<Item = Vec3> + Clone) -> Result<Mat3> {
    let mut n = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points.clone() {
        if p[2].abs() < 1e-300 {
            return Err(Error::DegenerateConfiguration("point at infinity in correspondences".into()));
        }
        cx += p[0] / p[2];
        cy += p[1] / p[2];
        n += 1.0;
    }
    cx /= n;
    cy /= n;
    let mean: f64 = points
        .map(|p| ((p[0] / p[2] - cx).powi(2) + (p[1] / p[2] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean > 1e-300) {
        return Err(Error::DegenerateConfiguration("all image points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Ok(Mat3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

/// Least-squares tensor from the trifocal incidence relation, linear in the
/// 27 entries. All 9 equations per triple are stacked; the solution is the
/// right singular vector of the smallest singular value, computed in
/// similarity-normalized image coordinates and mapped back. Returned with unit
/// Frobenius norm.
pub fn estimate_linear(triples: &[PointTriple]) -> Result<TrifocalTensor<f64>> {
    if triples.len() < 7 {
        return Err(Error::InsufficientData(format!(
            "{} point triples given, at least 7 are needed",
            triples.len()
        )));
    }
    let n1 = normalizing_similarity(triples.iter().map(|t| t.q1))?;
    let n2 = normalizing_similarity(triples.iter().map(|t| t.q2))?;
    let n3 = normalizing_similarity(triples.iter().map(|t| t.q3))?;

    let rows = 9 * triples.len();
    let mut design = DMatrix::<f64>::zeros(rows, 27);
    for (n, tr) in triples.iter().enumerate() {
        let q1 = n1 * tr.q1;
        let q1 = q1 / q1.norm();
        let x2 = skew(&((n2 * tr.q2).normalize()));
        let x3 = skew(&((n3 * tr.q3).normalize()));
        for r in 0..3 {
            for c in 0..3 {
                let row = 9 * n + 3 * r + c;
                for j in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            design[(row, j * 9 + a * 3 + b)] = q1[j] * x2[(r, a)] * x3[(b, c)];
                        }
                    }
                }
            }
        }
    }

    let d = svd(&design);
    let (s1, s26, s27) = (d.s[0], d.s[25], d.s[26]);
    if !(s26 > 1e-10 * s1) {
        return Err(Error::DegenerateConfiguration(format!(
            "design matrix has rank below 26 (σ26/σ1 = {:e})",
            s26 / s1
        )));
    }
    if s27 > 0.0 && s26 / s27 < MIN_SPECTRAL_GAP {
        return Err(Error::DegenerateConfiguration(format!(
            "no spectral gap in the design matrix (σ26/σ27 = {:.3})",
            s26 / s27
        )));
    }
    let v: Vec<f64> = d.v.column(26).iter().copied().collect();
    let t_norm = TrifocalTensor::from_flat(&v);
    let n2_inv = n2.try_inverse().expect("similarity is invertible");
    let n3_inv = n3.try_inverse().expect("similarity is invertible");
    let n1_inv = n1.try_inverse().expect("similarity is invertible");
    let t = apply_homographies(&t_norm, &n1_inv, &n2_inv, &n3_inv)?;
    Ok(t.normalized().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use crate::tensor::trifocal_from_cameras;
    use nalgebra::Vector4;

    fn triples_from(cams: &crate::tensor::CameraTriple<f64>, rng: &mut impl rand::Rng, n: usize) -> Vec<PointTriple> {
        let ps = cams.projections();
        (0..n)
            .map(|_| {
                let x = Vector4::new(sampling::normal(rng), sampling::normal(rng), 4.0 + sampling::normal(rng), 1.0);
                PointTriple { q1: ps[0] * x, q2: ps[1] * x, q3: ps[2] * x }
            })
            .collect()
    }

    #[test]
    fn noise_free_recovers_tensor() {
        let mut rng = sampling::rng(21);
        for _ in 0..20 {
            let cams = sampling::projective_triple(&mut rng);
            let t = trifocal_from_cameras(&cams);
            let data = triples_from(&cams, &mut rng, 20);
            let est = estimate_linear(&data).unwrap();
            assert!(est.projective_distance(&t) <= 1e-8);
        }
    }

    #[test]
    fn too_few_triples() {
        let mut rng = sampling::rng(22);
        let cams = sampling::calibrated_triple(&mut rng);
        let data = triples_from(&cams, &mut rng, 6);
        assert!(matches!(estimate_linear(&data), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn single_space_point_is_degenerate() {
        let mut rng = sampling::rng(23);
        let cams = sampling::calibrated_triple(&mut rng);
        let one = triples_from(&cams, &mut rng, 1)[0];
        let data = vec![one; 12];
        assert!(matches!(estimate_linear(&data), Err(Error::DegenerateConfiguration(_))));
    }
}
