//! `rquant`: optimal quantizers for the R-measure from the command line.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when `verify` finds that the
//! certified enclosure does not contain the closed-form error.

mod commands;
mod format;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rquant", version, about = "Exact optimal n-means for the R-measure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal sets of n-means in closed form.
    Optimal(OptimalArgs),
    /// The quantization error V_n for n = 1..=n_max.
    ErrorTable(ErrorTableArgs),
    /// Checks V_n against a certified enclosure of the canonical set's distortion.
    Verify(VerifyArgs),
    /// Multi-start Lloyd search on a finite surrogate of the measure.
    Lloyd(LloydArgs),
    /// Dimension estimates and coefficient scans.
    Asymptotics {
        #[command(subcommand)]
        kind: AsymptoticsKind,
    },
    /// Draws the canonical optimal set over the nested triangles as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("mode").args(["canonical", "all", "index"])))]
pub struct OptimalArgs {
    #[arg(long)]
    pub n: u64,
    /// Lexicographically first set (the default).
    #[arg(long)]
    pub canonical: bool,
    /// Every optimal set; refused when there are more than 10^4.
    #[arg(long)]
    pub all: bool,
    /// The k-th set (0-based) in enumeration order.
    #[arg(long, value_name = "K")]
    pub index: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct ErrorTableArgs {
    #[arg(long)]
    pub n_max: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: u64,
    /// Stop refining once the enclosure is this narrow (a rational such as 1/1000000000000 or 0.000001).
    #[arg(long, default_value = "0")]
    pub epsilon: String,
    #[arg(long, default_value_t = 20)]
    pub max_depth: u32,
}

#[derive(Args, Debug)]
pub struct LloydArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Surrogate level: one atom per cell of this depth.
    #[arg(long, default_value_t = 7)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub r1: Option<String>,
    #[arg(long)]
    pub r2: Option<String>,
    #[arg(long)]
    pub r3: Option<String>,
    #[arg(long)]
    pub p1: Option<String>,
    #[arg(long)]
    pub p2: Option<String>,
    #[arg(long)]
    pub p3: Option<String>,
    /// Triangle family: S (equilateral) or T (right isosceles).
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Subcommand, Debug)]
pub enum AsymptoticsKind {
    /// dim_est = 2 ln n / (-ln V_n) for 2 <= n <= n_max.
    Dimension {
        #[arg(long)]
        n_max: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
    /// n^2 V_n along n = floor(x 3^l), l = 1..=levels.
    Coefficient {
        #[arg(long)]
        x: String,
        #[arg(long)]
        levels: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub n: u64,
    /// Deepest level of triangles drawn (at most 8).
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    /// Image width in pixels (at least 64).
    #[arg(long, default_value_t = 512)]
    pub width: u32,
    #[arg(long, default_value_t = 4)]
    pub radius: u32,
    /// Number the points.
    #[arg(long)]
    pub labels: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure categories mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Mismatch(String),
}

impl From<rquant_core::Error> for Failure {
    fn from(e: rquant_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("I/O error: {e}"))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("RQUANT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("RQUANT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Optimal(a) => commands::optimal(&a, &mut out),
        Command::ErrorTable(a) => commands::error_table(&a, &mut out),
        Command::Verify(a) => commands::verify(&a, &mut out),
        Command::Lloyd(a) => commands::lloyd(&a, &mut out),
        Command::Asymptotics { kind } => commands::asymptotics(&kind, &mut out),
        Command::Render(a) => render::run(&a, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}
