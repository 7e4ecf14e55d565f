use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use trifocal::calibration::{assess, decompose_calibrated, radical_witness_polys, CalibrationClass};
use trifocal::canonical::canonicalize;
use trifocal::catalog;
use trifocal::constraints::{
    constraint_report, independence_certificate, quintic_dependency_residual, ConstraintReport, Family,
};
use trifocal::estimate::estimate_linear;
use trifocal::io::{complex_tensor_to_json, parse_correspondences, parse_tensor, tensor_to_json, AnyTensor, Correspondences};
use trifocal::sampling;
use trifocal::scene::{generate_scene, run_experiment, ExperimentConfig, PipelineOptions, SceneConfig, TensorSource};
use trifocal::tensor::{trifocal_from_cameras, RealTensor};
use trifocal::tolerance::Tolerances;
use trifocal::Error;

#[derive(Parser)]
#[command(name = "trifocal", version, about = "Constraint checks and pose recovery for trifocal tensors")]
struct Cli {
    /// Calibration and report tolerance on unit-norm tensors.
    #[arg(long, global = true, env = "TRIFOCAL_TOL", default_value_t = 1e-8)]
    tol: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tensor, a scene or a correspondence file.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Evaluate every constraint family on a tensor file ("-" for stdin).
    Check {
        input: String,
        /// Exit with status 1 unless the tensor is judged calibrated.
        #[arg(long, value_enum)]
        expect: Option<Expectation>,
    },
    /// Rotate a real tensor into canonical form.
    Canon { input: String },
    /// Recover rotations and translations from a calibrated tensor.
    Decompose { input: String },
    /// Estimate a tensor linearly from a correspondence file.
    Estimate { input: String },
    /// Run the estimate-then-test pipeline over a batch of synthetic scenes.
    Experiment {
        #[arg(long, default_value_t = 10)]
        scenes: usize,
        /// Comma-separated image noise levels.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1e-6, 1e-4, 1e-2])]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Give the cameras random calibration matrices.
        #[arg(long)]
        intrinsics: bool,
        /// Test the image tensor without removing known calibration.
        #[arg(long)]
        raw: bool,
        /// Use the tensor built from the cameras instead of the estimate.
        #[arg(long)]
        built: bool,
    },
    /// Numerical independence certificates and identity checks.
    Certify {
        #[arg(long, value_enum, default_value_t = FamilyArg::All)]
        family: FamilyArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expectation {
    Calibrated,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    All,
    Eigenvalue,
    Six,
    Quintic,
}

#[derive(Subcommand)]
enum GenCommand {
    /// A tensor document.
    Tensor {
        #[arg(long, value_enum, default_value_t = TensorKind::Calibrated)]
        kind: TensorKind,
    },
    /// A synthetic scene with cameras, points and observations.
    Scene {
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        intrinsics: bool,
    },
    /// The observations of a synthetic scene as a correspondence file.
    Correspondences {
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        intrinsics: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TensorKind {
    /// From random rotations and translations.
    Calibrated,
    /// From random projective cameras.
    Projective,
    /// From random complex rotations and translations.
    Complex,
    /// Satisfies the eigenvalue quartics only.
    EigenvalueOnly,
    /// Passes the epipolar constraints with an undefined epipole.
    AmbiguousEpipole,
    /// Complex, satisfies all fifteen quartics, not calibrated.
    ComplexQuartic,
}

/// Final status of a command.
enum Outcome {
    Success,
    NotCalibrated,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotCalibratedInput(_) => 1,
            ref e if e.is_input_error() => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NotCalibrated) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(input_failure("--tol must be a positive finite number"));
    }
    let tol = Tolerances::with_tol(cli.tol);
    match &cli.command {
        Command::Gen { what } => {
            let doc = generate(what, cli.seed)?;
            emit_json(cli, &doc)?;
            Ok(Outcome::Success)
        }
        Command::Check { input, expect } => {
            let t = read_tensor(input)?;
            let report = match &t {
                AnyTensor::Real(t) => constraint_report(t, &tol),
                AnyTensor::Complex(t) => constraint_report(t, &tol),
            };
            let verdict = t.as_real().map(|r| assess(r, &tol));
            let calibrated = verdict.as_ref().map(|v| v.verdict) == Some(CalibrationClass::Calibrated);
            if cli.format == Format::Csv {
                emit(cli, &report_csv(&report))?;
            } else {
                emit_json(cli, &json!({"constraints": report, "calibration": verdict}))?;
            }
            if expect.is_some() && !calibrated {
                return Ok(Outcome::NotCalibrated);
            }
            Ok(Outcome::Success)
        }
        Command::Canon { input } => {
            let t = read_real_tensor(input)?;
            let r = canonicalize(&t)?;
            if cli.format == Format::Csv {
                let names = ["lambda1", "nu1", "rho1", "sigma1", "mu2", "nu2", "rho2", "sigma2", "rho3", "sigma3"];
                let mut s = String::from("parameter,value\n");
                for (n, v) in names.iter().zip(r.canonical.to_array()) {
                    s += &format!("{n},{v:e}\n");
                }
                emit(cli, &s)?;
            } else {
                let (first, second) = radical_witness_polys(&r.canonical);
                emit_json(cli, &json!({"canonicalization": r, "canonical_tensor": tensor_to_json(&r.canonical_tensor()), "witnesses": {"first": first, "second": second}}))?;
            }
            Ok(Outcome::Success)
        }
        Command::Decompose { input } => {
            let t = read_real_tensor(input)?;
            no_csv(cli)?;
            let d = decompose_calibrated(&t, &tol)?;
            emit_json(cli, &json!({"decomposition": d, "rebuilt_tensor": tensor_to_json(&d.tensor())}))?;
            Ok(Outcome::Success)
        }
        Command::Estimate { input } => {
            let text = read_input(input)?;
            let c = parse_correspondences(&text)?;
            no_csv(cli)?;
            let t = estimate_linear(&c.triples)?;
            emit_json(cli, &tensor_to_json(&t))?;
            Ok(Outcome::Success)
        }
        Command::Experiment { scenes, noise, points, intrinsics, raw, built } => {
            let cfg = ExperimentConfig {
                seed: cli.seed,
                scenes: *scenes,
                noise_levels: noise.clone(),
                scene: SceneConfig { points: *points, intrinsics: *intrinsics, ..Default::default() },
                pipeline: PipelineOptions {
                    source: if *built { TensorSource::Built } else { TensorSource::Estimated },
                    use_intrinsics: !*raw,
                    tolerances: tol,
                },
            };
            let out = run_experiment(&cfg)?;
            if cli.format == Format::Csv {
                let mut s = String::from("scenario,seed,noise,verdict,max_quartic,estimation_error,error\n");
                for r in &out.records {
                    let verdict = r.calibration.as_ref().map(|c| format!("{:?}", c.verdict)).unwrap_or_default();
                    let q = r.max_quartic().map(|v| format!("{v:e}")).unwrap_or_default();
                    let e = r.estimation_error.map(|v| format!("{v:e}")).unwrap_or_default();
                    let err = r.error.clone().unwrap_or_default().replace(',', ";");
                    s += &format!("{},{},{:e},{verdict},{q},{e},{err}\n", r.scenario, r.seed, r.noise);
                }
                emit(cli, &s)?;
            } else {
                emit_json(cli, &serde_json::to_value(&out).expect("serializable"))?;
            }
            Ok(Outcome::Success)
        }
        Command::Certify { family } => {
            let families: Vec<Family> = match family {
                FamilyArg::All => vec![Family::Eigenvalue, Family::SixQuartic, Family::Quintic, Family::QuinticRaw],
                FamilyArg::Eigenvalue => vec![Family::Eigenvalue],
                FamilyArg::Six => vec![Family::SixQuartic],
                FamilyArg::Quintic => vec![Family::Quintic, Family::QuinticRaw],
            };
            let mut rng = sampling::rng(cli.seed);
            let certs: Vec<_> = families.iter().map(|f| independence_certificate(*f, &mut rng)).collect();
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let t = RealTensor::from_fn(|_, _, _| sampling::normal(&mut rng));
                worst = worst.max(quintic_dependency_residual(&t).norm() / t.norm().powi(5));
            }
            let ok = certs.iter().all(|c| c.passes);
            if cli.format == Format::Csv {
                let mut s = String::from("family,size,samples,rank,expected_rank,passes\n");
                for c in &certs {
                    s += &format!("{:?},{},{},{},{},{}\n", c.family, c.size, c.samples, c.rank, c.expected_rank, c.passes);
                }
                emit(cli, &s)?;
            } else {
                emit_json(cli, &json!({"certificates": certs, "quintic_dependency_residual": worst}))?;
            }
            if !ok {
                return Err(Failure { code: 3, message: "independence certificate failed".into() });
            }
            Ok(Outcome::Success)
        }
    }
}

fn generate(what: &GenCommand, seed: u64) -> Result<Value, Failure> {
    let mut rng = sampling::rng(seed);
    Ok(match what {
        GenCommand::Tensor { kind } => match kind {
            TensorKind::Calibrated => tensor_to_json(&trifocal_from_cameras(&sampling::calibrated_triple(&mut rng)).normalized().0),
            TensorKind::Projective => tensor_to_json(&trifocal_from_cameras(&sampling::projective_triple(&mut rng)).normalized().0),
            TensorKind::Complex => complex_tensor_to_json(&trifocal_from_cameras(&sampling::complex_calibrated_triple(&mut rng)).normalized().0),
            TensorKind::EigenvalueOnly => tensor_to_json(&catalog::eigenvalue_only()),
            TensorKind::AmbiguousEpipole => tensor_to_json(&catalog::ambiguous_epipole()),
            TensorKind::ComplexQuartic => complex_tensor_to_json(&catalog::complex_quartic_solution()),
        },
        GenCommand::Scene { points, noise, intrinsics } => {
            let s = generate_scene(seed, &SceneConfig { points: *points, noise: *noise, intrinsics: *intrinsics, ..Default::default() })?;
            let mut v = serde_json::to_value(&s).expect("serializable");
            v["tensor"] = tensor_to_json(&s.image_tensor().normalized().0);
            v
        }
        GenCommand::Correspondences { points, noise, intrinsics } => {
            let s = generate_scene(seed, &SceneConfig { points: *points, noise: *noise, intrinsics: *intrinsics, ..Default::default() })?;
            serde_json::to_value(Correspondences { triples: s.observations }).expect("serializable")
        }
    })
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| input_failure(format!("reading stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| input_failure(format!("reading {path}: {e}")))
    }
}

fn read_tensor(path: &str) -> Result<AnyTensor, Failure> {
    Ok(parse_tensor(&read_input(path)?)?)
}

fn read_real_tensor(path: &str) -> Result<RealTensor, Failure> {
    match read_tensor(path)? {
        AnyTensor::Real(t) => Ok(t),
        AnyTensor::Complex(_) => Err(input_failure("this command needs a real tensor")),
    }
}

fn no_csv(cli: &Cli) -> Result<(), Failure> {
    if cli.format == Format::Csv {
        return Err(input_failure("CSV output is available for check, canon, experiment and certify"));
    }
    Ok(())
}

fn report_csv(r: &ConstraintReport) -> String {
    let mut s = String::from("family,degree,index,value,verdict\n");
    for f in r.families() {
        for (i, v) in f.values.iter().enumerate() {
            s += &format!("{},{},{},{:e},{:?}\n", f.name, f.degree, i, v, f.verdict);
        }
    }
    s
}

fn emit_json(cli: &Cli, v: &Value) -> Result<(), Failure> {
    let mut text = if cli.pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) }.expect("serializable");
    text.push('\n');
    emit(cli, &text)
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| input_failure(format!("writing {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure { code: 3, message: format!("writing stdout: {e}") }),
    }
}
