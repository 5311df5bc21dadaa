//! Batch front end: JSON problem files in, JSON reports out.
//!
//! Exit codes: 0 pass, 1 computed but failed, 2 bad input, 3 numeric failure.

mod problem;
mod report;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use thiserror::Error;

pub use problem::{Payload, Problem, Task};
pub use report::{Report, MAP_ROW_CAP, SCHEMA_VERSION};

use crate::flow::{FlowError, IntegratorConfig};
use crate::normal::{NormalConfig, NormalError};
use crate::numeric::NumericError;
use crate::verify::{GridSpec, VerifyError};
use crate::weighted::CalculusError;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MOSER_NORMAL_THREADS";

#[derive(Parser, Debug, Clone, Default)]
#[command(name = "moser-normal", version, about = "Normal forms by the Moser path method")]
pub struct Args {
    /// Problem file (JSON).
    #[arg(required_unless_present = "fixtures")]
    pub problem: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sampled map table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// RK4 steps on [0, 1] (default 256).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time below which numeric paths extrapolate the velocity (default 1e-6).
    #[arg(long)]
    pub t0: Option<f64>,
    /// Half-width of the verification box.
    #[arg(long = "grid-radius")]
    pub grid_radius: Option<f64>,
    /// Grid nodes per axis (odd, so the origin is a node).
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Run the built-in regression registry instead of a problem file.
    #[arg(long, conflicts_with = "problem")]
    pub fixtures: bool,
    /// Ignore unknown keys in the problem file.
    #[arg(long)]
    pub lax: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid problem: {0}")]
    Schema(String),
    #[error("invalid option: {0}")]
    Option(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Write { .. } => 3,
            _ => 2,
        }
    }
}

/// How a failed computation is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    /// A hypothesis does not hold (not Euler-like, degenerate, not closed).
    Hypothesis,
    /// The input is outside what the task accepts.
    Input,
    /// Escape, singular solve or non-finite value.
    Numeric,
}

impl Failure {
    pub fn label(self) -> &'static str {
        match self {
            Failure::Hypothesis => "hypothesis",
            Failure::Input => "input",
            Failure::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Failure::Hypothesis => 1,
            Failure::Input => 2,
            Failure::Numeric => 3,
        }
    }
}

fn classify_calculus(e: &CalculusError) -> Failure {
    match e {
        CalculusError::NotClosed { .. } | CalculusError::DegreeZeroObstruction { .. } => Failure::Hypothesis,
        _ => Failure::Input,
    }
}

fn classify_flow(e: &FlowError) -> Failure {
    match e {
        FlowError::NotEulerLike(_) => Failure::Hypothesis,
        FlowError::InvalidConfig(_) | FlowError::Dimension { .. } => Failure::Input,
        FlowError::Escape { .. } | FlowError::NonFinite { .. } | FlowError::Numeric(_) => Failure::Numeric,
    }
}

fn classify_verify(e: &VerifyError) -> Failure {
    match e {
        VerifyError::Flow(f) => classify_flow(f),
        VerifyError::Calculus(c) => classify_calculus(c),
        VerifyError::Dimension { .. } | VerifyError::UnknownCase(_) => Failure::Input,
        VerifyError::SingularJacobian { .. } | VerifyError::NonFinite { .. } | VerifyError::Numeric(_) => {
            Failure::Numeric
        }
    }
}

pub fn classify(e: &NormalError) -> Failure {
    match e {
        NormalError::Weights { .. } | NormalError::NotPolynomial => Failure::Input,
        NormalError::NotSecondOrder { .. }
        | NormalError::DegenerateHessian { .. }
        | NormalError::DegenerateForm { .. }
        | NormalError::DegenerateLeadingForm { .. }
        | NormalError::FiltrationDegree { .. } => Failure::Hypothesis,
        NormalError::Calculus(c) => classify_calculus(c),
        NormalError::Flow(f) => classify_flow(f),
        NormalError::Verify(v) => classify_verify(v),
        NormalError::Numeric(NumericError::Eval(_) | NumericError::Singular { .. } | NumericError::NonFinite { .. }) => {
            Failure::Numeric
        }
    }
}

/// Caps the global rayon pool from the environment. Only the first call in a
/// process takes effect.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Option(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Problem settings overridden by the command-line flags.
fn effective_config(problem: Option<&Problem>, dim: usize, args: &Args) -> Result<NormalConfig, CliError> {
    let mut cfg = NormalConfig::for_dim(dim);
    if let Some(p) = problem {
        if let Some(g) = p.grid {
            cfg.grid = g;
        }
        if let Some(i) = p.integrator {
            cfg.integrator = i;
        }
    }
    if args.grid_radius.is_some() || args.grid_points.is_some() {
        let radius = args.grid_radius.unwrap_or(cfg.grid.radius());
        let points = args.grid_points.unwrap_or(cfg.grid.points_per_axis());
        cfg.grid = GridSpec::new(radius, points).map_err(|e| CliError::Option(e.to_string()))?;
    }
    if args.steps.is_some() || args.t0.is_some() {
        cfg.integrator = IntegratorConfig::new(
            args.steps.unwrap_or(cfg.integrator.steps),
            args.t0.unwrap_or(cfg.integrator.t0),
        )
        .map_err(|e| CliError::Option(e.to_string()))?;
    }
    Ok(cfg)
}

/// Loads, runs and writes. Returns the process exit code.
pub fn run(args: &Args) -> i32 {
    match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("moser-normal: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    configure_threads()?;
    let start = Instant::now();
    let (mut report, code) = if args.fixtures {
        let cfg = effective_config(None, 2, args)?;
        report::fixtures(&cfg)
    } else {
        let path = args.problem.as_ref().ok_or_else(|| CliError::Option("no problem file given".into()))?;
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?;
        let problem = Problem::from_json(&text, args.lax)?;
        let cfg = effective_config(Some(&problem), problem.dim, args)?;
        report::solve(&problem, &cfg)
    };
    if let Some(path) = &args.csv {
        match &report.table {
            Some(table) => {
                fs::write(path, table.to_csv()).map_err(|source| CliError::Write {
                    path: path.clone(),
                    source,
                })?;
            }
            None => report.warn("no map table for this task; CSV not written"),
        }
    }
    let text = report.to_json(start.elapsed());
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    if args.fixtures {
        eprint!("{}", report.fixture_table());
    }
    Ok(code)
}

/// Entry point of the binary.
pub fn main() -> i32 {
    run(&Args::parse())
}

/// Parse the report text back and return its deterministic part.
pub fn report_body(text: &str) -> Option<Value> {
    let v: Value = serde_json::from_str(text).ok()?;
    v.get("body").cloned()
}

pub(crate) fn grid_json(g: &GridSpec) -> Value {
    json!({"radius": g.radius(), "points_per_axis": g.points_per_axis()})
}
