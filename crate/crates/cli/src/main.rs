//! `qrank`: generate graphs, run classical and quantum PageRank, analyze runs.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "qrank",
    version,
    about = "Classical and Szegedy-walk quantum PageRank"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph in edge-list format.
    Generate {
        #[command(subcommand)]
        kind: GraphKind,
        /// Output file (stdout if omitted).
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Classical PageRank by power iteration.
    Classical(ClassicalArgs),
    /// Quantum PageRank time series and its statistics.
    Quantum(QuantumArgs),
    /// Hierarchy report for a finished quantum run.
    Analyze(AnalyzeArgs),
}

#[derive(Subcommand, Clone)]
pub enum GraphKind {
    /// Binary tree with every edge pointing towards the root.
    Tree {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
        levels: u32,
    },
    /// Directed cycle 1 -> 2 -> ... -> n -> 1.
    Cycle {
        #[arg(long)]
        n: usize,
    },
    /// Four-node web whose patched matrix is reducible.
    Reducible,
    /// Two nodes, one link, one dangling node.
    DanglingPair,
    /// Seeded random digraph, each ordered pair linked with probability p.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Hyperlink,
    Patched,
    Google,
}

#[derive(Args)]
pub struct ClassicalArgs {
    /// Edge-list file.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Matrix to iterate; `hyperlink` and `patched` are undamped.
    #[arg(long, value_enum, default_value_t = MatrixKind::Google)]
    pub matrix: MatrixKind,
    /// Start vector: `uniform` or a 1-based node id. Defaults to uniform for
    /// the Google matrix and to node 1 for the undamped ones.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct QuantumArgs {
    /// Edge-list file.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2048)]
    pub steps: usize,
    /// Coarse-graining segments; must divide `--steps`. Defaults to 64, or
    /// to gcd(64, steps) when 64 does not divide the step count.
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Cross-check the spectral series against dense powers of U².
    #[arg(long)]
    pub dense_oracle: bool,
    /// Recorded in the summary; useful when the graph came from `generate random`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// `summary.json` written by `quantum`.
    pub summary: PathBuf,
    /// Series file (defaults to `series.csv` next to the summary).
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Directory for `hierarchy.json` (defaults to the summary's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind, out } => commands::generate(&kind, out.as_deref()),
        Command::Classical(args) => commands::classical(&args),
        Command::Quantum(args) => commands::quantum(&args),
        Command::Analyze(args) => commands::analyze(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
