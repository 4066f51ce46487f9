//! `pcfg-prefix`: validate grammars, score sentence prefixes, cross-check
//! against the brute-force oracles and run the benchmark grid.
//!
//! Exit status: 0 on success, 1 when the grammar fails validation (or an
//! oracle check fails), 2 on syntax errors, unreadable files and invalid
//! option combinations.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcfg_prefix::bench::BenchAlgo;
use pcfg_prefix::{Algorithm, SemiringKind};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "pcfg-prefix",
    version,
    about = "Inside and prefix weights under CNF grammars"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a grammar file and report tightness.
    Check(CheckArgs),
    /// Score every prefix of every input sentence.
    Score(ScoreArgs),
    /// Compare prefix weights against the truncated-enumeration oracle.
    Oracle(OracleArgs),
    /// Time the algorithms on random dense grammars and print CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Also print the left-corner expectation matrix.
    #[arg(long)]
    left_corner: bool,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    output: Format,
    #[arg(long, default_value_t = 12)]
    precision: usize,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Sentences, one per line; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "fastjl", value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long, value_enum, default_value_t = SemiringArg::Prob)]
    semiring: SemiringArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    output: Format,
    #[arg(long, default_value_t = 12)]
    precision: usize,
    /// Worker threads over input lines; output order is input order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Grammar file; when absent a random dense grammar is drawn from `--seed`.
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    num_nt: usize,
    #[arg(long, default_value_t = 2)]
    num_terminals: usize,
    /// Longest complete string enumerated; bounds the truncation error.
    #[arg(long, default_value_t = 60)]
    max_len: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    output: Format,
    #[arg(long, default_value_t = 12)]
    precision: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Nonterminal counts.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
    nt: Vec<usize>,
    /// Sentence lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
    len: Vec<usize>,
    /// First seed; seeds are `seed..seed + seeds`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_bench_algo)]
    algos: Vec<BenchAlgo>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 4)]
    num_terminals: usize,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SemiringArg {
    Prob,
    Log,
    Viterbi,
    Boolean,
}

impl From<SemiringArg> for SemiringKind {
    fn from(s: SemiringArg) -> Self {
        match s {
            SemiringArg::Prob => SemiringKind::Prob,
            SemiringArg::Log => SemiringKind::Log,
            SemiringArg::Viterbi => SemiringKind::Viterbi,
            SemiringArg::Boolean => SemiringKind::Boolean,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn parse_bench_algo(s: &str) -> Result<BenchAlgo, String> {
    s.parse()
}

/// Marks errors that map to exit status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationFailed(pub String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => commands::check(a),
        Command::Score(a) => commands::score(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationFailed>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
