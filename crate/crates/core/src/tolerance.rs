//! Default numerical thresholds.
//!
//! Every threshold is relative to a stated power of the input norm. The
//! constraint families are homogeneous, so callers normalize to unit
//! Frobenius norm before comparing against these values.

use serde::{Deserialize, Serialize};

/// Threshold configuration shared by classification and decomposition routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Acceptance threshold for the calibration verdict (15 quartics, unit-norm tensor).
    pub calibration: f64,
    /// Residual threshold for essential / trifocal essential classification.
    pub essential: f64,
    /// Multiplier between the accept and reject thresholds. Values in
    /// between are reported as indeterminate.
    pub hysteresis: f64,
    /// Per-family pass threshold used by constraint reports.
    pub report: f64,
    /// Relative singular value below which a 3x3 matrix is treated as rank deficient.
    pub rank: f64,
    /// Relative threshold on |λ1² - μ2²| and the sign sub-case checks in decomposition.
    pub decomposition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            calibration: 1e-8,
            essential: 1e-9,
            hysteresis: 10.0,
            report: 1e-8,
            rank: 1e6 * f64::EPSILON,
            decomposition: 1e-6,
        }
    }
}

impl Tolerances {
    /// Same defaults with a different calibration / report threshold.
    pub fn with_tol(tol: f64) -> Self {
        Tolerances {
            calibration: tol,
            report: tol,
            ..Self::default()
        }
    }
}

/// Three-way outcome of a thresholded test with a hysteresis band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    /// `Pass` if `value <= tol`, `Fail` if `value >= band * tol`, otherwise indeterminate.
    pub fn from_residual(value: f64, tol: f64, band: f64) -> Self {
        if value.is_nan() {
            Verdict::Fail
        } else if value <= tol {
            Verdict::Pass
        } else if value >= band * tol {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        }
    }
}
