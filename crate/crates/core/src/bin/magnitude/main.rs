//! `magnitude`: magnitude estimates, boundary geometry, the `lambda_3`
//! calibration, the ellipsoid experiment and symbol calculus from the
//! command line.
//!
//! Data goes to files or standard output, summaries to standard error.

mod commands;
mod symbol_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magnitude_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "magnitude", version, about = "Magnitude of metric spaces and its large-scale expansion")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Magnitude of a finite space or sampled lower bounds for a domain.
    Magnitude(MagnitudeArgs),
    /// Volume, area, mean-curvature integral and Willmore energy.
    Geometry(GeometryArgs),
    /// Calibrate lambda_3 on the unit ball.
    Calibrate(CalibrateArgs),
    /// Tabulate c3 against V0 over flattening ellipsoids.
    Falsify(FalsifyArgs),
    /// Exact symbol calculus on JSON symbols.
    #[command(subcommand)]
    Symbol(symbol_cmd::SymbolCommand),
}

#[derive(Args, Debug)]
struct MagnitudeArgs {
    /// Domain as JSON or a bare name (ball, interval, ellipsoid, solid_torus).
    #[arg(long, conflicts_with_all = ["points", "distances"])]
    domain: Option<String>,
    /// CSV of point coordinates (`x` or `x,y,z` header).
    #[arg(long, conflicts_with = "distances")]
    points: Option<PathBuf>,
    /// CSV distance matrix.
    #[arg(long)]
    distances: Option<PathBuf>,
    /// A single scale.
    #[arg(long = "R", conflicts_with = "r_grid")]
    r: Option<f64>,
    /// Scales as `start:stop:count` or a comma list.
    #[arg(long = "R-grid")]
    r_grid: Option<String>,
    /// Absolute change between refinement levels that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Largest sample size per estimate.
    #[arg(long = "N-max", default_value_t = 4096)]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::Fps)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-scale refinement reports as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StrategyArg {
    Grid,
    Fps,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum GeometryMode {
    Mesh,
    Quadrature,
}

#[derive(Args, Debug)]
struct GeometryArgs {
    #[arg(long, default_value = "ball")]
    domain: String,
    #[arg(long, value_enum, default_value_t = GeometryMode::Quadrature)]
    mode: GeometryMode,
    #[arg(long, default_value_t = 4)]
    refinement: u32,
    #[arg(long = "quad-order", default_value_t = magnitude_core::geometry::DEFAULT_QUAD_ORDER)]
    quad_order: usize,
    /// Read the surface from an OFF file instead of meshing the domain.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write the generated mesh as OFF.
    #[arg(long = "mesh-out")]
    mesh_out: Option<PathBuf>,
    /// Also fit intrinsic volumes with this many Monte Carlo samples per scale.
    #[arg(long = "N-mc")]
    n_mc: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Functionals JSON (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrationArgs {
    #[arg(long = "R-grid", default_value = "0.5,0.75,1,1.25,1.5,2")]
    r_grid: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long = "N-max", default_value_t = 4096)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `extrapolated` or `lower_bound`.
    #[arg(long, default_value = "extrapolated")]
    estimator: String,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    cal: CalibrationArgs,
    #[arg(long, default_value = "calibration.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FalsifyArgs {
    /// Calibration JSON from `magnitude calibrate`.
    #[arg(long, conflicts_with = "calibrate")]
    calibration: Option<PathBuf>,
    /// Calibrate first, with the calibration flags below.
    #[arg(long)]
    calibrate: bool,
    #[arg(long = "calibration-R-grid", default_value = "0.5,0.75,1,1.25,1.5,2")]
    cal_r_grid: String,
    #[arg(long = "a-grid", default_value = "1,0.5,0.25,0.125")]
    a_grid: String,
    /// Scales for the fitted c3 column.
    #[arg(long = "R-grid", default_value = "0.5,0.75,1,1.25,1.5,2")]
    r_grid: String,
    /// Samples per magnitude estimate for the fitted c3 column; 0 skips it.
    #[arg(long, default_value_t = 0)]
    budget: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long = "N-mc", default_value_t = 1_000_000)]
    n_mc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Experiment CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `start:stop:count` or a comma-separated list.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidInput(format!("bad grid `{s}`: {what}"));
    if let Some((a, rest)) = s.split_once(':') {
        let (b, n) = rest.split_once(':').ok_or_else(|| bad("expected start:stop:count"))?;
        let a: f64 = a.trim().parse().map_err(|_| bad("start"))?;
        let b: f64 = b.trim().parse().map_err(|_| bad("stop"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("count"))?;
        return match n {
            0 => Err(bad("count must be positive")),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    match cli.command {
        Command::Magnitude(a) => commands::magnitude(a),
        Command::Geometry(a) => commands::geometry(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Falsify(a) => commands::falsify(a),
        Command::Symbol(c) => symbol_cmd::run(c),
    }
}

fn main() -> ExitCode {
    // `magnitude --domain ...` is shorthand for `magnitude magnitude --domain ...`
    let mut args: Vec<String> = std::env::args().collect();
    if let Some(first) = args.get(1) {
        let passthrough = ["-h", "--help", "-V", "--version", "--threads"];
        if first.starts_with('-') && !passthrough.contains(&first.as_str()) {
            args.insert(1, "magnitude".into());
        }
    }
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
