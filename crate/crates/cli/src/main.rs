//! `steerlab`: lane keeping assist simulation, sweeps and response-surface
//! analysis from the command line.

mod analysis;
mod error;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "steerlab", version, about = "Lane keeping assist simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration file plus the overrides shared by the simulation commands.
/// Flags win over the file.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// TOML configuration file; defaults apply to anything it leaves out.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of the run (simulate) or first seed of each condition (sweep).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Session length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Driver behaviour.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ModeArg {
    Attentive,
    Distracted,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SrrMethodArg {
    Gap,
    Rate,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum RankArg {
    /// Smallest model with Cp <= p first.
    #[default]
    Adequate,
    /// Cp closest to p.
    Closest,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one session and write its trajectory.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Intervention torque k_TOR in N m.
        #[arg(long, conflicts_with = "condition")]
        tor: Option<f64>,
        /// Deadband k_DEV in m.
        #[arg(long, conflicts_with = "condition")]
        dev: Option<f64>,
        /// 1-based condition id in the configured TOR x DEV grid.
        #[arg(long)]
        condition: Option<usize>,
        /// Trajectory CSV to write.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Run every seed of every TOR x DEV condition.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// TOR levels, comma separated.
        #[arg(long, value_delimiter = ',')]
        tor: Option<Vec<f64>>,
        /// DEV levels, comma separated.
        #[arg(long, value_delimiter = ',')]
        dev: Option<Vec<f64>>,
        /// Seeds per condition.
        #[arg(long)]
        seeds: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Also write every trajectory under `<out>/trajectories`.
        #[arg(long)]
        trajectories: bool,
        /// No per-condition progress on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Recompute the metrics of a trajectory CSV.
    Metrics {
        trajectory: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        srr_method: Option<SrrMethodArg>,
    },
    /// Best-subsets quadratic fit of a response over the factor columns.
    Fit {
        /// Aggregate CSV, per-run metrics CSV, or any CSV of factor columns
        /// plus a response column.
        input: PathBuf,
        /// Response: a metric name for sweep output, else a column name.
        #[arg(long)]
        response: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        rank: RankArg,
        /// Output directory for the report, coefficient and contour files.
        #[arg(long, default_value = "fit")]
        out: PathBuf,
        /// Contour grid points per axis.
        #[arg(long, default_value_t = 41)]
        resolution: usize,
    },
    /// Stationary point of a fitted model or of the built-in satisfaction surface.
    Optimize {
        /// `term,coefficient` CSV as written by `fit`.
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
    /// Evaluate a surface on a grid for contour plotting.
    Contour {
        #[arg(long)]
        coefficients: Option<PathBuf>,
        /// First factor range `lo,hi`.
        #[arg(long, value_parser = parse_range, default_value = "1,3")]
        x1_range: (f64, f64),
        /// Second factor range `lo,hi`.
        #[arg(long, value_parser = parse_range, default_value = "0,0.8")]
        x2_range: (f64, f64),
        /// Points per axis, `N` or `N1xN2`.
        #[arg(long, value_parser = parse_resolution, default_value = "81")]
        resolution: (usize, usize),
        /// Name of the value column.
        #[arg(long, default_value = "sat")]
        value_name: String,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Williams balanced Latin square of condition orders.
    LatinSquare {
        /// Number of conditions.
        n: usize,
        /// Emit this many participant rows, cycling through the square.
        #[arg(long)]
        participants: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected lo,hi, got {s:?}"));
    }
    let lo = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| e.to_string());
    match s.split_once('x') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("SSL_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("SSL_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot start {threads} worker threads: {e}")))
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate {
            config,
            tor,
            dev,
            condition,
            out,
        } => run::simulate(&config, tor, dev, condition, &out),
        Command::Sweep {
            config,
            tor,
            dev,
            seeds,
            out,
            trajectories,
            quiet,
        } => run::sweep(&config, tor, dev, seeds, &out, trajectories, quiet),
        Command::Metrics {
            trajectory,
            config,
            srr_method,
        } => run::metrics(&trajectory, config.as_deref(), srr_method),
        Command::Fit {
            input,
            response,
            rank,
            out,
            resolution,
        } => analysis::fit(&input, response.as_deref(), rank, &out, resolution),
        Command::Optimize { coefficients } => analysis::optimize(coefficients.as_deref()),
        Command::Contour {
            coefficients,
            x1_range,
            x2_range,
            resolution,
            value_name,
            out,
        } => analysis::contour(
            coefficients.as_deref(),
            x1_range,
            x2_range,
            resolution,
            &value_name,
            out.as_deref(),
        ),
        Command::LatinSquare { n, participants, out } => run::latin_square(n, participants, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
