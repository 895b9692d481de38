//! Command-line front end: `analyze`, `classify`, `geodesic`, `project`,
//! `generate` and `selftest`.
//!
//! Exit codes: 0 doubly autoparallel (or trivially so), 1 not doubly
//! autoparallel, 2 no positive point, 3 any error. Commands without a verdict
//! exit 0 on success.

mod files;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

pub use files::{
    fmt_float, to_json, AlphaResidual, ClassifyFile, ModelSpecFile, ProjectionFile, ReportFile,
    Residuals, Tolerances,
};

use crate::analysis::{
    analyze, analyze_at, log_affine_verify, CanonicalModel, DaReport, Verdict, BASE_POINT_TOL,
};
use crate::error::{Error, Result};
use crate::hadamard::PositiveVector;
use crate::infogeo::{
    alpha_geodesic_bvp, alpha_projection, autoparallel_residual, ProjectionOptions, SimplexPoint,
    DEFAULT_STEPS,
};
use crate::selftest::{self, Thresholds, DEFAULT_CASES};
use crate::subspace::{Subspace, DEFAULT_TOL};

pub const EXIT_DA: i32 = 0;
pub const EXIT_NOT_DA: i32 = 1;
pub const EXIT_NO_POSITIVE_POINT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

pub const DEFAULT_LOG_AFFINE_SAMPLES: usize = 200;
pub const REPORT_ALPHAS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Debug, Parser)]
#[command(name = "dasimplex", version, about = "Doubly autoparallel submanifolds of the probability simplex")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide and classify a model; writes the full report.
    Analyze(AnalyzeArgs),
    /// Like `analyze`, reporting only the canonical form.
    Classify(AnalyzeArgs),
    /// Connect two points by an α-geodesic and write a CSV trace.
    Geodesic(GeodesicArgs),
    /// α-projection of a point onto the model.
    Project(ProjectArgs),
    /// Write the spec of a canonical or vertex-span model.
    Generate(GenerateArgs),
    /// Run the seeded invariant battery.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_LOG_AFFINE_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    /// Optional model; both endpoints must lie on it.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Comma-separated probabilities.
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Comma-separated probabilities.
    #[arg(long)]
    pub point: String,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, conflicts_with = "vertex_span", requires = "sizes")]
    pub q: Option<usize>,
    /// Comma-separated block sizes, each at least 2.
    #[arg(long, value_delimiter = ',', conflicts_with = "vertex_span")]
    pub sizes: Option<Vec<usize>>,
    /// `n d`: the span of `e_1, …, e_d` and a point on the opposite face.
    #[arg(long, num_args = 2, value_names = ["N", "D"])]
    pub vertex_span: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Apply a seeded random coordinate permutation.
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = DEFAULT_CASES)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match run(&cli.command, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a parsed command, writing primary output to `out` unless an
/// `--output` path is given.
pub fn run(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Analyze(args) => cmd_analyze(args, out),
        Command::Classify(args) => cmd_classify(args, out),
        Command::Geodesic(args) => cmd_geodesic(args, out),
        Command::Project(args) => cmd_project(args, out),
        Command::Generate(args) => cmd_generate(args, out),
        Command::Selftest(args) => cmd_selftest(args, out),
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidInput(format!("cannot write output: {e}"))),
    }
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::DoublyAutoparallel | Verdict::TrivialFullSpace => EXIT_DA,
        Verdict::NotDA => EXIT_NOT_DA,
        Verdict::NoPositivePoint => EXIT_NO_POSITIVE_POINT,
    }
}

fn load_model(path: &Path) -> Result<(ModelSpecFile, Subspace)> {
    let spec = ModelSpecFile::read(path)?;
    let w = spec.subspace()?;
    Ok((spec, w))
}

fn run_analysis(spec: &ModelSpecFile, w: &Subspace, tol: f64) -> Result<DaReport> {
    match spec.base_point(w)? {
        Some(a) => analyze_at(w, &a, tol),
        None => analyze(w, tol),
    }
}

/// Builds the full report for a model spec.
pub fn build_report(spec: &ModelSpecFile, tol: f64, seed: u64, samples: usize) -> Result<ReportFile> {
    let w = spec.subspace()?;
    let report = run_analysis(spec, &w, tol)?;
    let base = report.base_point.clone();
    let tolerances = Tolerances {
        closure: tol,
        base_point_independence: BASE_POINT_TOL,
        autoparallel_alphas: REPORT_ALPHAS.to_vec(),
        log_affine_samples: samples,
        seed,
    };
    let mut file = ReportFile::from_report(report, tolerances, spec.labels.clone());
    if let Some(a) = base {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        file.residuals.log_affine = Some(log_affine_verify(&w, &a, samples, &mut rng)?.max_residual);
        let p = SimplexPoint::from_positive(a.as_slice())?;
        for alpha in REPORT_ALPHAS {
            let residual = autoparallel_residual(&w, &p, alpha)?;
            file.residuals.autoparallel.push(AlphaResidual { alpha, residual });
        }
    }
    Ok(file)
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = ModelSpecFile::read(&args.input)?;
    let file = build_report(&spec, args.tol, args.seed, args.samples)?;
    emit(args.output.as_deref(), &to_json(&file), out)?;
    Ok(exit_code(file.verdict))
}

fn cmd_classify(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let (spec, w) = load_model(&args.input)?;
    let report = run_analysis(&spec, &w, args.tol)?;
    let file = ClassifyFile {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        tolerance: args.tol,
        verdict: report.verdict,
        coordinate_classes: report.coordinate_classes,
        canonical: report.canonical,
    };
    emit(args.output.as_deref(), &to_json(&file), out)?;
    Ok(exit_code(file.verdict))
}

/// Parses `"0.2,0.3,0.5"` with `.` as the only decimal separator.
pub fn parse_point(text: &str) -> Result<SimplexPoint> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number {s:?} in point: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    SimplexPoint::new(values)
}

fn require_on_model(w: &Subspace, p: &SimplexPoint, tol: f64, name: &str) -> Result<()> {
    let m = w.contains(p.probs(), tol)?;
    if !m.contains {
        return Err(Error::Precondition(format!(
            "{name} point is off the model (residual {:e})",
            m.residual
        )));
    }
    Ok(())
}

fn cmd_geodesic(args: &GeodesicArgs, out: &mut dyn Write) -> Result<i32> {
    let p = parse_point(&args.from)?;
    let q = parse_point(&args.to)?;
    let model = match &args.input {
        Some(path) => {
            let (_, w) = load_model(path)?;
            require_on_model(&w, &p, args.tol, "--from")?;
            require_on_model(&w, &q, args.tol, "--to")?;
            Some(w)
        }
        None => None,
    };
    let trace = alpha_geodesic_bvp(&p, &q, args.alpha, args.steps)?;
    let residuals = match &model {
        Some(w) => trace.constraint_residuals(w)?,
        None => vec![0.0; trace.points.len()],
    };
    let n1 = p.len();
    let mut text = String::from("t");
    for i in 1..=n1 {
        text.push_str(&format!(",p_{i}"));
    }
    text.push_str(",constraint_residual\n");
    for ((t, x), r) in trace.times.iter().zip(&trace.points).zip(&residuals) {
        text.push_str(&fmt_float(*t));
        for v in x.probs() {
            text.push(',');
            text.push_str(&fmt_float(*v));
        }
        text.push(',');
        text.push_str(&fmt_float(*r));
        text.push('\n');
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    match &args.output {
        Some(path) => {
            emit(Some(path), &text, out)?;
            writeln!(out, "max_constraint_residual,{}", fmt_float(worst))
        }
        None => {
            emit(None, &text, out)?;
            writeln!(out, "# max_constraint_residual,{}", fmt_float(worst))
        }
    }
    .map_err(|e| Error::InvalidInput(format!("cannot write output: {e}")))?;
    Ok(0)
}

fn cmd_project(args: &ProjectArgs, out: &mut dyn Write) -> Result<i32> {
    let (_, w) = load_model(&args.input)?;
    let p = parse_point(&args.point)?;
    let opts = ProjectionOptions { starts: args.starts, seed: args.seed, ..ProjectionOptions::default() };
    let proj = alpha_projection(&p, &w, args.alpha, &opts)?;
    let file = ProjectionFile {
        alpha: args.alpha,
        point: proj.point.probs().to_vec(),
        divergence: proj.divergence,
        agreement_diameter: proj.agreement_diameter,
        starts: proj.starts,
        seed: args.seed,
    };
    emit(args.output.as_deref(), &to_json(&file), out)?;
    Ok(0)
}

fn normalised_block<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Result<PositiveVector> {
    let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    PositiveVector::new(raw.into_iter().map(|v| v / total).collect())
}

/// Model spec for the generate command.
pub fn generate_spec(args: &GenerateArgs) -> Result<ModelSpecFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    if let Some(nd) = &args.vertex_span {
        let (n, d) = (nd[0], nd[1]);
        if d >= n {
            return Err(Error::InvalidInput(format!("vertex span needs d < n, got n = {n}, d = {d}")));
        }
        let tail = normalised_block(&mut rng, n + 1 - d)?;
        let mut v0 = vec![0.0; d];
        v0.extend_from_slice(tail.as_slice());
        let mut gens = vec![v0.clone()];
        for k in 0..d {
            let mut e = vec![0.0; n + 1];
            e[k] = 1.0;
            gens.push(e);
        }
        // v0 + Σ e_k, normalised, is a positive point of the span
        let mut base: Vec<f64> = v0.iter().enumerate().map(|(i, v)| if i < d { 1.0 } else { *v }).collect();
        let total: f64 = base.iter().sum();
        base.iter_mut().for_each(|v| *v /= total);
        return Ok(ModelSpecFile { ambient_dim: n + 1, basis: gens, base_point: Some(base), labels: None });
    }
    let (Some(q), Some(sizes)) = (args.q, args.sizes.as_ref()) else {
        return Err(Error::InvalidInput("give either --q with --sizes, or --vertex-span".into()));
    };
    if sizes.is_empty() {
        return Err(Error::InvalidInput("--sizes needs at least one block".into()));
    }
    if let Some(s) = sizes.iter().find(|s| **s < 2) {
        return Err(Error::InvalidInput(format!("block sizes must be at least 2, got {s}")));
    }
    let vectors = sizes.iter().map(|&s| normalised_block(&mut rng, s)).collect::<Result<Vec<_>>>()?;
    let n1 = q + sizes.iter().sum::<usize>();
    let mut perm: Vec<usize> = (0..n1).collect();
    if args.shuffle {
        perm.shuffle(&mut rng);
    }
    let model = CanonicalModel::new(q, sizes, vectors, perm)?;
    Ok(ModelSpecFile {
        ambient_dim: n1,
        basis: model.generators(),
        base_point: Some(model.base_point().into_inner()),
        labels: None,
    })
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = generate_spec(args)?;
    emit(args.output.as_deref(), &to_json(&spec), out)?;
    Ok(0)
}

fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> Result<i32> {
    let th = Thresholds { tol: args.tol, ..Thresholds::default() };
    let mut failed = false;
    let io = |e: std::io::Error| Error::InvalidInput(format!("cannot write output: {e}"));
    for outcome in selftest::run_all(args.cases, args.seed, &th) {
        let status = if outcome.failures.is_empty() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{status} {:<22} {}/{} cases",
            outcome.suite.name(),
            outcome.passed,
            outcome.total()
        )
        .map_err(io)?;
        for f in &outcome.failures {
            failed = true;
            writeln!(out, "    seed {}: {}", f.seed, f.reason).map_err(io)?;
        }
    }
    Ok(if failed { 1 } else { 0 })
}
