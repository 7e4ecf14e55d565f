use trifocal::calibration::CalibrationClass;
use trifocal::scene::{generate_scene, run_experiment, run_pipeline, ExperimentConfig, PipelineOptions, PointLayout, SceneConfig};

#[test]
fn median_residual_grows_with_noise() {
    let cfg = ExperimentConfig { scenes: 100, ..Default::default() };
    let out = run_experiment(&cfg).unwrap();
    let medians: Vec<f64> = out.summary.iter().map(|s| s.median_max_quartic.unwrap_or(f64::INFINITY)).collect();
    assert_eq!(medians.len(), 4);
    assert!(medians.windows(2).all(|w| w[0] <= w[1]), "{medians:?}");
    assert_eq!(out.summary[0].calibrated, 100);
}

#[test]
fn experiment_is_independent_of_thread_count() {
    let cfg = ExperimentConfig { scenes: 6, ..Default::default() };
    let parallel = serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap());
    assert_eq!(parallel, serial);
}

#[test]
fn known_intrinsics_are_removed_before_testing() {
    let cfg = SceneConfig { intrinsics: true, ..Default::default() };
    let scene = generate_scene(4, &cfg).unwrap();
    let with_k = run_pipeline(&scene, "k", &PipelineOptions::default());
    assert_eq!(with_k.calibration.unwrap().verdict, CalibrationClass::Calibrated);
    let raw = run_pipeline(&scene, "raw", &PipelineOptions { use_intrinsics: false, ..Default::default() });
    assert_eq!(raw.calibration.unwrap().verdict, CalibrationClass::NotCalibrated);
}

#[test]
fn collinear_points_are_reported_not_fatal() {
    let cfg = SceneConfig { layout: PointLayout::Collinear, ..Default::default() };
    let scene = generate_scene(5, &cfg).unwrap();
    let r = run_pipeline(&scene, "line", &PipelineOptions::default());
    assert!(r.error.unwrap().contains("degenerate"));
    assert!(r.calibration.is_none());
}
