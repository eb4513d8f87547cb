//! `lbd`: batch front end for the literature-mining pipeline.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lbd_core::discover::{DEFAULT_FINAL_CUT, DEFAULT_OVERLAP_THRESHOLD, DEFAULT_PER_SEED_K};
use lbd_core::embstore::DEFAULT_MIN_COUNT;
use lbd_core::ErrorKind;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_INTEGRITY: u8 = 4;
pub const EXIT_NOT_FOUND: u8 = 5;

/// Relative input paths are resolved against this directory when set.
pub const DATA_DIR_ENV: &str = "LBD_DATA_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "lbd",
    version,
    about = "Seed-based literature mining over static word vectors"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average `.cemb` subword streams into static word vectors.
    Aggregate(AggregateArgs),
    /// Acquire ranked candidates for a seed set.
    Discover(DiscoverArgs),
    /// Score a candidate list against ground-truth targets.
    Evaluate(EvaluateArgs),
    /// Recall/precision as the number of seeds grows.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    /// Input `.cemb` streams (shards are merged).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output text vector file; counts go to `<out>.counts`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    /// Text vector file.
    #[arg(long)]
    pub vectors: PathBuf,
    /// Count sidecar; defaults to `<vectors>.counts` when that file exists.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Synonym TSV (canonical symbol, then synonyms).
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Pool synonyms with a plain mean instead of occurrence weights.
    #[arg(long)]
    pub unweighted_synonyms: bool,
}

#[derive(Args, Debug, Clone)]
pub struct AcquireArgs {
    #[arg(long, default_value_t = DEFAULT_PER_SEED_K)]
    pub per_seed_k: usize,
    #[arg(long, default_value_t = DEFAULT_FINAL_CUT)]
    pub cut: usize,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
    pub overlap_threshold: f64,
}

#[derive(Args, Debug)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Seed file, one name per line, best first.
    #[arg(long)]
    pub seeds: PathBuf,
    /// Use only the first N seeds of the file.
    #[arg(long)]
    pub seed_count: Option<usize>,
    #[command(flatten)]
    pub acquire: AcquireArgs,
    /// Candidate TSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Fuzzy,
    Both,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Candidate TSV (needs a `candidate` column).
    #[arg(long)]
    pub candidates: PathBuf,
    /// Ground-truth targets, one per line.
    #[arg(long)]
    pub truth: PathBuf,
    /// Cut-off ranks; repeat for several.
    #[arg(long = "k", default_values_t = [100usize, 2802])]
    pub ks: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Credit a target once per matching candidate instead of once overall.
    #[arg(long)]
    pub credit_every_match: bool,
    /// Report TSV; annotations go to `<out>.annotations.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Seed list pre-ranked best first.
    #[arg(long)]
    pub ranked_seeds: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64])]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 2802)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Fuzzy)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub acquire: AcquireArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Bad flag combinations detected after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<lbd_core::Error>() {
            return match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Format => EXIT_FORMAT,
                ErrorKind::Integrity => EXIT_INTEGRITY,
                ErrorKind::NotFound => EXIT_NOT_FOUND,
                ErrorKind::Io => EXIT_OTHER,
            };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            if e.kind() == std::io::ErrorKind::NotFound {
                return EXIT_NOT_FOUND;
            }
        }
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_OTHER);
        }
    }
    let result = match cli.command {
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Discover(a) => commands::discover(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
