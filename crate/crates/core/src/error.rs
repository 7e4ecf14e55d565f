use thiserror::Error;

/// Errors raised by the geometric and algebraic routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is zero (norm {0:e})")]
    ZeroVector(f64),
    #[error("vector is not isotropic: |s^T s| / |s|^2 = {0:e}")]
    NotIsotropic(f64),
    #[error("matrix is not symmetric: |M - M^T| / |M| = {0:e}")]
    NotSymmetric(f64),
    #[error("matrix is not a rotation: {0}")]
    NotRotation(String),
    #[error("essential matrix has degenerate rank (sigma2/sigma1 = {0:e})")]
    DegenerateRank(f64),
    #[error("correlation slice {slice} is rank deficient (sigma2/sigma1 = {ratio:e})")]
    RankDeficientSlice { slice: usize, ratio: f64 },
    #[error("epipole is ambiguous: stacked null vectors have rank < 2 (sigma2/sigma1 = {0:e})")]
    AmbiguousEpipole(f64),
    #[error("calibration matrix is singular or not upper triangular with positive diagonal")]
    SingularCalibration,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("matrix is not a trifocal essential matrix (|det|={det:e}, |phi|={phi:e})")]
    NotTrifocalEssential { det: f64, phi: f64 },
    #[error("failed to compute a null vector")]
    NullVectorFailure,
    #[error("degenerate line: the mapped point vanishes")]
    DegenerateLine,
    #[error("degenerate SVD in canonicalization: {0}")]
    DegenerateSvd(String),
    #[error("tensor is not calibrated (max quartic residual {0:e})")]
    NotCalibratedInput(f64),
    #[error("canonicalization failed: {0}")]
    CanonicalizationFailure(String),
    #[error("could not resolve the sign sub-case: {0}")]
    CaseResolutionFailure(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid input document: {0}")]
    InvalidDocument(String),
}

impl Error {
    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDocument(_) | Error::ConfigInvalid(_) | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
