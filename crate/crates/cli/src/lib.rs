//! `phisub` command-line runner.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numeric failure,
//! 3 a simulated frequency exceeded its theoretical bound.

mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phisub::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "phisub", version, about = "Numerical toolkit for φ_p-subgaussian random variables")]
pub struct Cli {
    /// Decimal places in printed numbers (0-15).
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=output::MAX_PRECISION as i64))]
    pub precision: u8,

    /// Also write results to this file (.csv or .json).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Flat key = value file with default flag values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: ExperimentConfig,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentConfig {
    /// Evaluate φ_p, its conjugate φ_q and the numeric Legendre transform.
    #[command(args_override_self = true)]
    Conjugate(ConjugateArgs),
    /// τ_φp norm of a catalog model or a sample file.
    #[command(args_override_self = true)]
    Norm(NormArgs),
    /// Tail bounds for a single variable, partial sums or the MZ scaling.
    #[command(args_override_self = true)]
    Tailbound(TailArgs),
    /// Fit τ(S_n) ≤ c·n^{1-α} from a norm table and test series summability.
    #[command(name = "slln-check", args_override_self = true)]
    SllnCheck(SllnArgs),
    /// Monte-Carlo convergence report.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ConjugateArgs {
    #[arg(long)]
    pub p: f64,
    /// Single evaluation point; overrides the grid.
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub y_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub y_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gaussian,
    Rademacher,
    Uniform,
    Bounded,
    Absgauss,
    Empirical,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Half-width of the centered uniform model.
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    /// Bound of the bounded centered model.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// Exponent of |g|^a − E|g|^a; defaults to 2/q.
    #[arg(long)]
    pub a: Option<f64>,
    /// Sample file for the empirical model.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailKind {
    Single,
    PartialSum,
    Mz,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[arg(long, value_enum, default_value_t = TailKind::PartialSum)]
    pub kind: TailKind,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Norm bound C (single) or growth constant c (partial-sum).
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Common bound on the summand norms (mz).
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.5)]
    pub s: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000, 10000])]
    pub n: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct SllnArgs {
    /// File of `n, τ` rows.
    #[arg(long, conflicts_with = "pairs")]
    pub table: Option<PathBuf>,
    /// Inline table, e.g. `1:1,4:2,16:4`.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<String>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    pub eps: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Distribution, e.g. `rademacher`, `gaussian:sigma=2`,
    /// `martingale:d=1,driver=damped`, `copies:rademacher`.
    #[arg(long, default_value = "rademacher")]
    pub dist: String,
    #[arg(long, default_value_t = 1.5)]
    pub s: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000, 10000])]
    pub n_grid: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Maps a library error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numeric(_) | Error::Divergence { .. } | Error::NotSubgaussian { .. } => EXIT_NUMERIC,
        Error::Domain(_) | Error::Unsupported(_) | Error::InsufficientData(_) | Error::Config(_) | Error::Io(_) => EXIT_USAGE,
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run(argv: &[String]) -> i32 {
    let argv = match config::expand_argv(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
