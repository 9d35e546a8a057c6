//! `ncgauge`: verification suites, minimization runs and two-point scans.
//!
//! Exit codes: 0 success, 1 failed suite or unconverged run, 2 bad
//! configuration.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use ncgauge::gauge::{flat_connection_check, minimize, FlatnessReport, MatrixConnection};
use ncgauge::lattice::{minimize_lattice, InitMode, LatticeConfig, LatticeSpec};
use ncgauge::linalg::{c, gellmann_basis, CMatrix, C64};
use ncgauge::optimize::{DescentParams, DescentStatus, TraceRow};
use ncgauge::spectral::{check_axioms, sm_algebra_fixture, two_point_action, two_point_swap_triple, two_point_triple};
use ncgauge::verify::verify_all;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    Verify,
    Minimize,
    TwoPoint,
    Axioms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Model {
    Matrix,
    Lattice,
    TwoPoint,
    TwoPointSwap,
    Sm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Init {
    Random,
    Zero,
    Canonical,
    Symmetric,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Shape {
    /// Square grid in the complex plane.
    Square,
    /// Real axis only.
    Real,
    /// Points on `|φ| = 1`.
    Circle,
}

#[derive(Debug, Parser)]
#[command(name = "ncgauge", version, about = "Noncommutative gauge theory toolkit")]
struct Cli {
    /// Command to run; may also be given with --command.
    #[arg(value_enum)]
    command: Option<Command>,
    #[arg(long = "command", value_enum)]
    command_flag: Option<Command>,
    /// JSON run configuration; its fields override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

/// Every setting of a run. Flags fill it first, then the JSON config file.
#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[arg(skip)]
    #[serde(default)]
    command: Option<Command>,
    /// Matrix size of the algebra M_n.
    #[arg(long)]
    #[serde(default)]
    n: Option<i64>,
    /// Fibre size of the two-point model.
    #[arg(long = "N")]
    #[serde(default, rename = "N")]
    big_n: Option<i64>,
    /// Module size for the matrix model (defaults to n).
    #[arg(long)]
    #[serde(default)]
    r: Option<i64>,
    /// Lattice extents, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(default)]
    mu: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    seed: Option<u64>,
    /// Iteration cap for minimization.
    #[arg(long)]
    #[serde(default)]
    steps: Option<usize>,
    /// Gradient-norm tolerance.
    #[arg(long)]
    #[serde(default)]
    tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// File for the minimization summary JSON; standard error when absent.
    #[arg(long)]
    #[serde(default)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(default)]
    model: Option<Model>,
    #[arg(long, value_enum)]
    #[serde(default)]
    init: Option<Init>,
    /// Random draws per property in verify.
    #[arg(long)]
    #[serde(default)]
    samples: Option<usize>,
    /// Points per axis of the φ grid.
    #[arg(long)]
    #[serde(default)]
    grid: Option<usize>,
    /// Half-width of the φ grid.
    #[arg(long)]
    #[serde(default)]
    range: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(default)]
    shape: Option<Shape>,
    /// Noise amplitude on top of a lattice vacuum start.
    #[arg(long)]
    #[serde(default)]
    noise: Option<f64>,
    /// Draw M at random from the seed instead of the identity.
    #[arg(long)]
    #[serde(default)]
    random_m: Option<bool>,
    /// Explicit M (config file only): rows of [re, im] pairs.
    #[arg(skip)]
    #[serde(default)]
    m: Option<Vec<Vec<[f64; 2]>>>,
}

impl RunConfig {
    fn overlay(&mut self, file: RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if file.$f.is_some() { self.$f = file.$f; } )* };
        }
        take!(command, n, big_n, r, dims, mu, seed, steps, tol, out, summary, model, init, samples, grid, range, shape, noise, random_m, m);
    }
}

struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

enum Outcome {
    Ok,
    Failed,
}

fn emit(out: &Option<PathBuf>, text: &str) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn positive(name: &str, v: Option<i64>, default: i64) -> Result<usize, ConfigError> {
    let v = v.unwrap_or(default);
    if v <= 0 {
        return Err(ConfigError(format!("{name} must be positive, got {v}")));
    }
    Ok(v as usize)
}

fn tolerance(cfg: &RunConfig) -> Result<f64, ConfigError> {
    let tol = cfg.tol.unwrap_or(1e-8);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ConfigError(format!("tol must be positive, got {tol}")));
    }
    Ok(tol)
}

fn csv_trace(trace: &[TraceRow]) -> Result<String, ConfigError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", "action", "grad_norm"])?;
    for row in trace {
        w.write_record([row.iteration.to_string(), row.action.to_string(), row.grad_norm.to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?)
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let n = positive("n", cfg.n, 2)?;
    let samples = cfg.samples.unwrap_or(20);
    let report = verify_all(n, cfg.seed.unwrap_or(0), samples)?;
    emit(&cfg.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
}

#[derive(Serialize)]
struct MinimizeSummary {
    model: Model,
    status: DescentStatus,
    iterations: usize,
    initial_action: f64,
    final_action: f64,
    grad_norm: f64,
    /// Orbit of the endpoint: `zero`, `canonical`, `other_flat` or `not_flat`.
    vacuum: &'static str,
    flatness: FlatnessReport,
}

fn classify(basis: &Arc<ncgauge::linalg::MatrixBasis>, f: &FlatnessReport, tol: f64) -> &'static str {
    if f.curvature_residual >= tol {
        return "not_flat";
    }
    if f.casimir.abs() < tol {
        return "zero";
    }
    if f.r == basis.n() {
        let can = flat_connection_check(&MatrixConnection::canonical(basis));
        if f.same_orbit_invariants(&can, tol.sqrt()) {
            return "canonical";
        }
    }
    "other_flat"
}

fn lattice_flatness(cfg: &LatticeConfig) -> Result<FlatnessReport, ConfigError> {
    // the Higgs field at site 0 as a matrix connection: vacua have [b_k, b_l] = C b_m
    let b: Vec<CMatrix> = (0..cfg.basis().dim()).map(|k| cfg.b(0, k).clone()).collect();
    Ok(flat_connection_check(&MatrixConnection::new(cfg.basis(), b)?))
}

fn run_minimize(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let n = positive("n", cfg.n, 2)?;
    let tol = tolerance(cfg)?;
    let steps = cfg.steps.unwrap_or(20_000);
    let seed = cfg.seed.unwrap_or(0);
    let params = DescentParams {
        max_iter: steps,
        tol,
        ..DescentParams::default()
    };
    let model = cfg.model.unwrap_or(Model::Matrix);
    let basis = Arc::new(gellmann_basis(n)?);
    // curvature residuals scale like the square root of the action
    let flat_tol = 1e-6_f64.max(tol.sqrt());
    let summary = match model {
        Model::Matrix => {
            let r = positive("r", cfg.r, n as i64)?;
            let conn0 = match cfg.init.unwrap_or(Init::Random) {
                Init::Random => MatrixConnection::random(&mut ChaCha8Rng::seed_from_u64(seed), &basis, r, 1.0),
                Init::Zero | Init::Symmetric => MatrixConnection::zero(&basis, r),
                Init::Canonical | Init::Broken => {
                    if r != n {
                        return Err(ConfigError("canonical start needs r = n".into()));
                    }
                    MatrixConnection::canonical(&basis)
                }
            };
            let rep = minimize(&conn0, &params);
            let flat = flat_connection_check(&rep.connection);
            emit(&cfg.out, &csv_trace(&rep.trace)?)?;
            MinimizeSummary {
                model,
                status: rep.status,
                iterations: rep.iterations,
                initial_action: rep.initial_action,
                final_action: rep.final_action,
                grad_norm: rep.grad_norm,
                vacuum: classify(&basis, &flat, flat_tol),
                flatness: flat,
            }
        }
        Model::Lattice => {
            let init = match cfg.init.unwrap_or(Init::Random) {
                Init::Random => InitMode::Random,
                Init::Zero | Init::Symmetric => InitMode::Symmetric,
                Init::Canonical | Init::Broken => InitMode::Broken,
            };
            let spec = LatticeSpec {
                dims: cfg.dims.clone().unwrap_or_else(|| vec![8]),
                n,
                mu: cfg.mu.unwrap_or(1.0),
                seed,
                init,
                noise: cfg.noise.unwrap_or(0.0),
                spacing: 1.0,
            };
            let cfg0 = spec.build()?;
            let rep = minimize_lattice(&cfg0, &params);
            let flat = lattice_flatness(&rep.config)?;
            emit(&cfg.out, &csv_trace(&rep.trace)?)?;
            MinimizeSummary {
                model,
                status: rep.status,
                iterations: rep.iterations,
                initial_action: rep.initial_action,
                final_action: rep.final_action,
                grad_norm: rep.grad_norm,
                vacuum: classify(&basis, &flat, flat_tol),
                flatness: flat,
            }
        }
        other => return Err(ConfigError(format!("minimize supports matrix and lattice models, not {other:?}"))),
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    match &cfg.summary {
        Some(p) => fs::write(p, json)?,
        None => io::stderr().write_all(json.as_bytes())?,
    }
    // a zero-step run only evaluates the starting point
    let failed = steps > 0 && summary.status == DescentStatus::MaxIterations;
    Ok(if failed { Outcome::Failed } else { Outcome::Ok })
}

fn matrix_m(cfg: &RunConfig, big_n: usize) -> Result<CMatrix, ConfigError> {
    if let Some(rows) = &cfg.m {
        if rows.len() != big_n || rows.iter().any(|r| r.len() != big_n) {
            return Err(ConfigError(format!("M must be {big_n} x {big_n}")));
        }
        if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(ConfigError("M has non-finite entries".into()));
        }
        return Ok(CMatrix::from_fn(big_n, big_n, |i, j| c(rows[i][j][0], rows[i][j][1])));
    }
    if cfg.random_m.unwrap_or(false) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        return Ok(ncgauge::linalg::random::complex(&mut rng, big_n, big_n));
    }
    Ok(CMatrix::identity(big_n, big_n))
}

fn run_two_point(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let big_n = positive("N", cfg.big_n, 1)?;
    let m = matrix_m(cfg, big_n)?;
    let grid = cfg.grid.unwrap_or(41);
    let range = cfg.range.unwrap_or(2.0);
    if grid < 2 || !(range > 0.0 && range.is_finite()) {
        return Err(ConfigError("grid must be at least 2 and range positive".into()));
    }
    let axis: Vec<f64> = (0..grid)
        .map(|i| -range + 2.0 * range * i as f64 / (grid - 1) as f64)
        .collect();
    let points: Vec<C64> = match cfg.shape.unwrap_or(Shape::Square) {
        Shape::Square => axis.iter().flat_map(|&y| axis.iter().map(move |&x| c(x, y))).collect(),
        Shape::Real => axis.iter().map(|&x| c(x, 0.0)).collect(),
        Shape::Circle => (0..grid)
            .map(|i| C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / grid as f64))
            .collect(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["re_phi", "im_phi", "action"])?;
    for phi in points {
        let s = two_point_action(phi, &m);
        w.write_record([phi.re.to_string(), phi.im.to_string(), s.to_string()])?;
    }
    emit(&cfg.out, &String::from_utf8(w.into_inner().map_err(|e| e.to_string())?)?)?;
    Ok(Outcome::Ok)
}

fn run_axioms(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let triple = match cfg.model.unwrap_or(Model::TwoPoint) {
        Model::TwoPoint => {
            let big_n = positive("N", cfg.big_n, 1)?;
            two_point_triple(big_n, &matrix_m(cfg, big_n)?)?
        }
        Model::TwoPointSwap => {
            let big_n = positive("N", cfg.big_n, 1)?;
            two_point_swap_triple(big_n, &matrix_m(cfg, big_n)?)?
        }
        Model::Sm => sm_algebra_fixture(None)?,
        other => return Err(ConfigError(format!("axioms supports two-point, two-point-swap and sm, not {other:?}"))),
    };
    let report = check_axioms(&triple);
    emit(&cfg.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    eprintln!("{report}");
    Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
}

fn run(cli: Cli) -> Result<Outcome, ConfigError> {
    let mut cfg = cli.flags;
    cfg.command = match (cli.command, cli.command_flag) {
        (Some(a), Some(b)) if a != b => return Err(ConfigError("conflicting commands".into())),
        (a, b) => a.or(b),
    };
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        let file: RunConfig = serde_json::from_str(&text)?;
        cfg.overlay(file);
    }
    match cfg.command {
        Some(Command::Verify) => run_verify(&cfg),
        Some(Command::Minimize) => run_minimize(&cfg),
        Some(Command::TwoPoint) => run_two_point(&cfg),
        Some(Command::Axioms) => run_axioms(&cfg),
        None => Err(ConfigError("no command given".into())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
