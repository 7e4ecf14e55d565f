//! Synthetic three-view scenes and the estimate-then-test pipeline.

use std::time::{Duration, Instant};

use nalgebra::Vector4;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{assess, CalibrationClass, CalibrationVerdict};
use crate::constraints::{constraint_report, ConstraintReport};
use crate::error::{Error, Result};
use crate::estimate::{estimate_linear, PointTriple};
use crate::linalg::{Mat3, Rotation3, Vec3};
use crate::rows::{from_rows, to_rows};
use crate::sampling;
use crate::tensor::{calibrate, trifocal_from_cameras, uncalibrate, CameraTriple, RealTensor};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointLayout {
    /// Points spread through a box in front of the first camera.
    #[default]
    General,
    /// All points on one space line.
    Collinear,
}

/// Parameters of [`generate_scene`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub points: usize,
    /// Range of depths along the first camera's axis.
    pub depth: (f64, f64),
    /// Range of camera centre distances from the first camera.
    pub baseline: (f64, f64),
    /// Largest rotation angle of the second and third cameras, in radians.
    pub max_angle: f64,
    /// Standard deviation of the Gaussian noise added to image coordinates.
    pub noise: f64,
    /// Draw random calibration matrices for the three cameras.
    pub intrinsics: bool,
    pub layout: PointLayout,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            points: 20,
            depth: (4.0, 8.0),
            baseline: (0.5, 2.0),
            max_angle: 0.3,
            noise: 0.0,
            intrinsics: false,
            layout: PointLayout::General,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        if self.points < 7 {
            return bad("at least 7 points are required");
        }
        if !(self.depth.0 > 0.0 && self.depth.0 <= self.depth.1 && self.depth.1.is_finite()) {
            return bad("depth range must be positive and ordered");
        }
        if !(self.baseline.0 >= 0.0 && self.baseline.0 <= self.baseline.1 && self.baseline.1 < self.depth.0) {
            return bad("baseline range must be ordered and shorter than the nearest depth");
        }
        if !(self.max_angle >= 0.0 && self.max_angle < 1.0) {
            return bad("max_angle must lie in [0, 1)");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be a finite nonnegative number");
        }
        Ok(())
    }
}

/// Poses of the second and third cameras relative to `[I | 0]`, with
/// optional calibration matrices stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCameras {
    pub r2: Rotation3,
    pub t2: Vec3,
    pub r3: Rotation3,
    pub t3: Vec3,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intrinsics: Option<[[[f64; 3]; 3]; 3]>,
}

impl SceneCameras {
    pub fn triple(&self) -> CameraTriple<f64> {
        CameraTriple::Calibrated { r2: self.r2, t2: self.t2, r3: self.r3, t3: self.t3 }
    }

    pub fn calibration_matrices(&self) -> Option<[Mat3; 3]> {
        self.intrinsics.map(|ks| ks.map(|k| from_rows(&k)))
    }
}

/// Cameras, space points and their (possibly noisy) images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub seed: u64,
    pub config: SceneConfig,
    pub cameras: SceneCameras,
    /// Homogeneous space points `(X, Y, Z, 1)`.
    pub points: Vec<[f64; 4]>,
    /// Image points normalized to third coordinate 1.
    pub observations: Vec<PointTriple>,
}

impl SyntheticScene {
    /// Tensor of the cameras without calibration matrices.
    pub fn calibrated_tensor(&self) -> RealTensor {
        trifocal_from_cameras(&self.cameras.triple())
    }

    /// Tensor of the cameras including the calibration matrices, if any.
    pub fn image_tensor(&self) -> RealTensor {
        let t = self.calibrated_tensor();
        match self.cameras.calibration_matrices() {
            Some([k1, k2, k3]) => uncalibrate(&t, &k1, &k2, &k3).expect("generated calibration matrices are valid"),
            None => t,
        }
    }
}

fn camera_pose<R: Rng + ?Sized>(rng: &mut R, cfg: &SceneConfig) -> (Rotation3, Vec3) {
    let angle = cfg.max_angle * rng.random::<f64>();
    let r = sampling::small_rotation(rng, angle);
    let centre = sampling::normal_vec3(rng).normalize() * rng.random_range(cfg.baseline.0..=cfg.baseline.1);
    // Camera [R | t] with centre c has t = -R c.
    let t = -(r.matrix() * centre);
    (r, t)
}

fn depth_in(r: &Rotation3, t: &Vec3, x: &Vec3) -> f64 {
    (r.matrix() * x + t)[2]
}

fn sample_point<R: Rng + ?Sized>(rng: &mut R, cfg: &SceneConfig, line: &(Vec3, Vec3)) -> Vec3 {
    let z = rng.random_range(cfg.depth.0..=cfg.depth.1);
    match cfg.layout {
        PointLayout::General => {
            let half = 0.4 * z;
            Vec3::new(rng.random_range(-half..=half), rng.random_range(-half..=half), z)
        }
        PointLayout::Collinear => {
            let (p, d) = line;
            p + d * ((z - p[2]) / d[2])
        }
    }
}

/// Deterministic scene for `seed`.
pub fn generate_scene(seed: u64, cfg: &SceneConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let mut rng = sampling::rng(seed);
    let (r2, t2) = camera_pose(&mut rng, cfg);
    let (r3, t3) = camera_pose(&mut rng, cfg);
    let intrinsics = cfg.intrinsics.then(|| [0, 1, 2].map(|_| to_rows(&sampling::calibration_matrix(&mut rng))));
    let cameras = SceneCameras { r2, t2, r3, t3, intrinsics };
    let line = (
        Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), cfg.depth.0),
        Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 1.0),
    );
    let ks = cameras.calibration_matrices().unwrap_or([Mat3::identity(); 3]);
    let projections = cameras.triple().projections();
    let min_depth = 0.1 * cfg.depth.0;

    let mut points = Vec::with_capacity(cfg.points);
    let mut observations = Vec::with_capacity(cfg.points);
    while points.len() < cfg.points {
        let x = sample_point(&mut rng, cfg, &line);
        if depth_in(&r2, &t2, &x) < min_depth || depth_in(&r3, &t3, &x) < min_depth {
            continue;
        }
        let xh = Vector4::new(x[0], x[1], x[2], 1.0);
        let mut q = [0, 1, 2].map(|v| {
            let p = ks[v] * projections[v] * xh;
            p / p[2]
        });
        if cfg.noise > 0.0 {
            for qv in q.iter_mut() {
                qv[0] += cfg.noise * sampling::normal(&mut rng);
                qv[1] += cfg.noise * sampling::normal(&mut rng);
            }
        }
        points.push([x[0], x[1], x[2], 1.0]);
        observations.push(PointTriple { q1: q[0], q2: q[1], q3: q[2] });
    }
    Ok(SyntheticScene { seed, config: *cfg, cameras, points, observations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorSource {
    Built,
    Estimated,
}

/// Result of one pipeline run. Wall-clock time is kept out of the JSON form
/// so that records are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scenario: String,
    pub seed: u64,
    pub noise: f64,
    pub source: TensorSource,
    /// True when known calibration matrices were removed before testing.
    pub calibrated_frame: bool,
    /// Distance between the estimated and the true image tensor.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimation_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constraints: Option<ConstraintReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub calibration: Option<CalibrationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip)]
    pub timing: Duration,
}

impl ExperimentRecord {
    pub fn max_quartic(&self) -> Option<f64> {
        self.calibration.as_ref().map(|c| c.max_residual)
    }
}

/// Pipeline switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub source: TensorSource,
    /// Remove the scene's calibration matrices before testing.
    pub use_intrinsics: bool,
    pub tolerances: Tolerances,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { source: TensorSource::Estimated, use_intrinsics: true, tolerances: Tolerances::default() }
    }
}

/// Estimates (or builds) the tensor, optionally removes known calibration,
/// and evaluates every constraint family and the calibration test. Errors
/// are recorded rather than returned.
pub fn run_pipeline(scene: &SyntheticScene, scenario: &str, opts: &PipelineOptions) -> ExperimentRecord {
    let start = Instant::now();
    let mut record = ExperimentRecord {
        scenario: scenario.to_string(),
        seed: scene.seed,
        noise: scene.config.noise,
        source: opts.source,
        calibrated_frame: false,
        estimation_error: None,
        constraints: None,
        calibration: None,
        error: None,
        timing: Duration::ZERO,
    };
    let outcome = (|| -> Result<()> {
        let truth = scene.image_tensor();
        let t = match opts.source {
            TensorSource::Built => truth,
            TensorSource::Estimated => {
                let est = estimate_linear(&scene.observations)?;
                record.estimation_error = Some(est.projective_distance(&truth));
                est
            }
        };
        let t = match (opts.use_intrinsics, scene.cameras.calibration_matrices()) {
            (true, Some([k1, k2, k3])) => {
                record.calibrated_frame = true;
                calibrate(&t, &k1, &k2, &k3)?
            }
            _ => t,
        };
        record.constraints = Some(constraint_report(&t, &opts.tolerances));
        record.calibration = Some(assess(&t, &opts.tolerances));
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record.timing = start.elapsed();
    record
}

/// A batch of scenes at several noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenes: usize,
    pub noise_levels: Vec<f64>,
    pub scene: SceneConfig,
    pub pipeline: PipelineOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            scenes: 10,
            noise_levels: vec![0.0, 1e-6, 1e-4, 1e-2],
            scene: SceneConfig::default(),
            pipeline: PipelineOptions::default(),
        }
    }
}

/// Per-noise-level aggregate of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub noise: f64,
    pub scenes: usize,
    /// Median over all scenes of the largest quartic residual, counting failed
    /// scenes as infinite. `None` when at least half the scenes failed.
    pub median_max_quartic: Option<f64>,
    pub calibrated: usize,
    pub not_calibrated: usize,
    pub indeterminate: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub summary: Vec<LevelSummary>,
    pub records: Vec<ExperimentRecord>,
}

/// Runs every scene of the batch in parallel. Scene `i` at noise level `l`
/// draws from the stream `(seed, l · scenes + i)`, and results are returned
/// in that index order, so the output does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.scene.validate()?;
    if cfg.scenes == 0 || cfg.noise_levels.is_empty() {
        return Err(Error::ConfigInvalid("experiment needs at least one scene and one noise level".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..cfg.noise_levels.len()).flat_map(|l| (0..cfg.scenes).map(move |i| (l, i))).collect();
    let records: Vec<ExperimentRecord> = jobs
        .par_iter()
        .map(|&(l, i)| {
            let index = (l * cfg.scenes + i) as u64;
            let seed = sampling::substream(cfg.seed, index).random::<u64>();
            let scene_cfg = SceneConfig { noise: cfg.noise_levels[l], ..cfg.scene };
            let name = format!("noise={:e}/scene={i}", cfg.noise_levels[l]);
            match generate_scene(seed, &scene_cfg) {
                Ok(scene) => run_pipeline(&scene, &name, &cfg.pipeline),
                Err(e) => ExperimentRecord {
                    scenario: name,
                    seed,
                    noise: scene_cfg.noise,
                    source: cfg.pipeline.source,
                    calibrated_frame: false,
                    estimation_error: None,
                    constraints: None,
                    calibration: None,
                    error: Some(e.to_string()),
                    timing: Duration::ZERO,
                },
            }
        })
        .collect();
    let summary = cfg
        .noise_levels
        .iter()
        .enumerate()
        .map(|(l, &noise)| summarize_level(noise, &records[l * cfg.scenes..(l + 1) * cfg.scenes]))
        .collect();
    Ok(ExperimentOutput { config: cfg.clone(), summary, records })
}

fn summarize_level(noise: f64, records: &[ExperimentRecord]) -> LevelSummary {
    // A record without residuals counts as worse than any residual.
    let mut quartics: Vec<f64> =
        records.iter().map(|r| r.max_quartic().filter(|v| !v.is_nan()).unwrap_or(f64::INFINITY)).collect();
    quartics.sort_by(f64::total_cmp);
    let count = |c: CalibrationClass| records.iter().filter(|r| r.calibration.as_ref().map(|v| v.verdict) == Some(c)).count();
    LevelSummary {
        noise,
        scenes: records.len(),
        median_max_quartic: Some(median(&quartics)).filter(|m| m.is_finite()),
        calibrated: count(CalibrationClass::Calibrated),
        not_calibrated: count(CalibrationClass::NotCalibrated),
        indeterminate: count(CalibrationClass::Indeterminate),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
