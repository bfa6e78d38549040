//! Benchmark harness for the learned-CDF sorter.
//!
//! Subcommands: `gen` (synthetic key files), `sort` (run the pipeline on a
//! file, stats JSON on stdout), `bench` (distribution x size matrix, CSV),
//! `analyze` (occupancy and deviation statistics for an estimates file
//! against a sorted truth file).
//!
//! Every flag can also be set through an `MLSORT_`-prefixed environment
//! variable (`MLSORT_SEED`, `MLSORT_THREADS`, ...). Exit codes: 0 success,
//! 1 validation error, 2 I/O error, 3 internal verification failure.

mod commands;
mod keyfile;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use keyfile::KeyFormat;

#[derive(Parser)]
#[command(name = "mlsort", version, about = "Learned-CDF sorting benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic key file
    Gen(GenArgs),
    /// Sort a key file through the learned pipeline; stats JSON on stdout
    Sort(SortArgs),
    /// Run a distribution x size benchmark matrix; CSV on stdout or --out
    Bench(BenchArgs),
    /// Occupancy/deviation statistics for rank estimates vs sorted truth
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum OrderArg {
    Asc,
    Desc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum ModelArg {
    /// Piecewise-linear interpolation of the sorted sample
    Pl,
    /// Single-hidden-layer network, Monte-Carlo trained
    Gvm,
}

#[derive(Args)]
struct GenArgs {
    /// Distribution: uniform, truncnorm, bimodal, trimodal or comb5
    #[arg(long, env = "MLSORT_DIST")]
    dist: String,
    /// Lower bound (uniform/truncnorm only; default -1000)
    #[arg(long, env = "MLSORT_LO", allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Upper bound (uniform/truncnorm only; default 1000)
    #[arg(long, env = "MLSORT_HI", allow_negative_numbers = true)]
    hi: Option<f64>,
    /// Mean (truncnorm only; default 0)
    #[arg(long, env = "MLSORT_MEAN", allow_negative_numbers = true)]
    mean: Option<f64>,
    /// Standard deviation (truncnorm only; default 250)
    #[arg(long, env = "MLSORT_STDDEV")]
    stddev: Option<f64>,
    /// Number of keys
    #[arg(long, env = "MLSORT_N")]
    n: usize,
    #[arg(long, default_value_t = 0, env = "MLSORT_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = KeyFormat::Text, env = "MLSORT_FORMAT")]
    format: KeyFormat,
    #[arg(long, env = "MLSORT_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct SortArgs {
    /// Input key file
    #[arg(long = "in", env = "MLSORT_IN")]
    input: PathBuf,
    #[arg(long, env = "MLSORT_OUT")]
    out: PathBuf,
    /// Applies to both the input and the output file
    #[arg(long, value_enum, default_value_t = KeyFormat::Text, env = "MLSORT_FORMAT")]
    format: KeyFormat,
    #[arg(long, value_enum, default_value_t = ModelArg::Gvm, env = "MLSORT_MODEL")]
    model: ModelArg,
    /// Hidden-layer size
    #[arg(long, default_value_t = 50, env = "MLSORT_M")]
    m: usize,
    /// Training sample size (clamped to the input size)
    #[arg(long, default_value_t = 10_000, env = "MLSORT_N0")]
    n0: usize,
    /// Monte-Carlo proposal budget
    #[arg(long, default_value_t = 30_000, env = "MLSORT_ITERATIONS")]
    iterations: u64,
    /// Independent training chains; best loss wins
    #[arg(long, default_value_t = 1, env = "MLSORT_RESTARTS")]
    restarts: u64,
    #[arg(long, default_value_t = 0, env = "MLSORT_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OrderArg::Asc, env = "MLSORT_ORDER")]
    order: OrderArg,
    /// Inference shards; output is identical for any value
    #[arg(long, default_value_t = 1, env = "MLSORT_THREADS")]
    threads: usize,
    /// Fraction of rank space (each end) routed to the tail sort
    #[arg(long, default_value_t = 0.0, env = "MLSORT_TAIL_FRACTION")]
    tail_fraction: f64,
    /// Train without the monotonicity constraint (exercises the comb path)
    #[arg(long, default_value_t = false)]
    no_enforce_monotone: bool,
    /// Comb window for the non-monotone repair path
    #[arg(long, default_value_t = 16)]
    comb_size: usize,
    /// Also write "key rank" estimate lines for `analyze`
    #[arg(long)]
    estimates_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated presets
    #[arg(long, default_value = "uniform,truncnorm", env = "MLSORT_DISTS")]
    dists: String,
    /// Comma-separated sizes; scientific notation accepted (1e5)
    #[arg(long, default_value = "1000,10000,100000,1000000", env = "MLSORT_SIZES")]
    sizes: String,
    #[arg(long, default_value_t = 10, env = "MLSORT_REPEATS")]
    repeats: usize,
    #[arg(long, default_value_t = 10_000, env = "MLSORT_N0")]
    n0: usize,
    /// Hidden-layer size; defaults to the preset's (10 smooth, 50 mixtures)
    #[arg(long, env = "MLSORT_M")]
    m: Option<usize>,
    #[arg(long, default_value_t = 30_000, env = "MLSORT_ITERATIONS")]
    iterations: u64,
    #[arg(long, default_value_t = 1, env = "MLSORT_RESTARTS")]
    restarts: u64,
    /// Base seed; each run derives its own from the row index
    #[arg(long, default_value_t = 0, env = "MLSORT_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 1, env = "MLSORT_THREADS")]
    threads: usize,
    /// CSV file; stdout when omitted
    #[arg(long, env = "MLSORT_OUT")]
    out: Option<PathBuf>,
    /// Allow sizes above the desk-scale ceiling of 1e6
    #[arg(long, default_value_t = false)]
    full_scale: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Estimates file: "key rank" per line, or bare keys (rank = position)
    #[arg(long, env = "MLSORT_ESTIMATES")]
    estimates: PathBuf,
    /// Sorted truth key file
    #[arg(long, env = "MLSORT_TRUTH")]
    truth: PathBuf,
    /// Format of the truth file
    #[arg(long, value_enum, default_value_t = KeyFormat::Text, env = "MLSORT_FORMAT")]
    format: KeyFormat,
}

/// CLI failure with its exit code: validation 1, I/O 2, internal 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<mlsort::Error> for CliError {
    fn from(e: mlsort::Error) -> Self {
        match e {
            mlsort::Error::Io(io) => CliError::Io(io.to_string()),
            mlsort::Error::VerificationFailed => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here and must exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::Sort(args) => commands::sort(args),
        Command::Bench(args) => commands::bench(args),
        Command::Analyze(args) => commands::analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
