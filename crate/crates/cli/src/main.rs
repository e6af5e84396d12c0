mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Usage or configuration problem; exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Parser)]
#[command(name = "syntaprobe", version, about = "Minimal-pair syntactic evaluation for masked language models")]
pub struct Cli {
    /// TOML file with default option values; flags and environment win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand built-in templates over a lexicon.
    Generate(GenerateArgs),
    /// Turn annotated corpus sentences into natural pairs.
    Ingest(IngestArgs),
    /// Build nonce pairs by replacing content words in annotated sentences.
    Nonce(NonceArgs),
    /// Drop pairs whose focus forms are out of vocabulary (and copular pairs).
    Filter(FilterArgs),
    /// Score pairs with a scorer and write one record per pair.
    Score(ScoreArgs),
    /// Aggregate records into an accuracy table.
    Report(ReportArgs),
    /// Print the built-in templates.
    DumpTemplates(DumpArgs),
    /// Serve a mock scorer over stdin/stdout.
    #[command(hide = true)]
    MockServer(MockServerArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "template")]
    pub suite: String,
    /// `all` or a comma-separated list of condition names.
    #[arg(long, default_value = "all")]
    pub conditions: String,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Cap per condition; larger expansions are sampled.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Annotated sentences, JSONL (`-` for stdin).
    #[arg(long)]
    pub annotated: PathBuf,
    /// `singular<TAB>plural` table; the shipped table is used when omitted.
    #[arg(long)]
    pub inflections: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write skipped sentences as JSONL.
    #[arg(long)]
    pub skipped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NonceArgs {
    #[arg(long)]
    pub annotated: PathBuf,
    #[arg(long)]
    pub inflections: Option<PathBuf>,
    /// Substitution classes, `{"classes": {"noun|sg": [...], ...}}`.
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated POS tags to substitute (default noun,verb,adj).
    #[arg(long, value_delimiter = ',')]
    pub content_pos: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    Auto,
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub stimuli: PathBuf,
    /// One word per line.
    #[arg(long, conflicts_with = "vocab_scorer")]
    pub vocab: Option<PathBuf>,
    /// Ask a scorer which forms are single vocabulary items.
    #[arg(long)]
    pub vocab_scorer: Option<String>,
    /// `auto` discards copular pairs for natural and nonce stimuli only.
    #[arg(long, value_enum, default_value = "auto")]
    pub discard_copular: Toggle,
    #[arg(long)]
    pub no_single_token_check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write discarded pairs as JSONL.
    #[arg(long)]
    pub discarded: Option<PathBuf>,
    /// Where to write a JSON summary of the discards.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieArg {
    Tie,
    Incorrect,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub stimuli: PathBuf,
    /// `cmd:<program> [args]`, `http://host/path` or `mock:<kind>`.
    #[arg(long, env = "SYNTAPROBE_SCORER")]
    pub scorer: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Batches in flight at once.
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long, value_enum)]
    pub tie_policy: Option<TieArg>,
    /// Seed for `mock:random` when no seed is given in the URI.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the scorer handshake and run settings as JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Attractors,
    Condition,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Markdown,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub group_by: GroupArg,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: DumpFormat,
}

#[derive(Debug, Args)]
pub struct MockServerArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<syntaprobe_core::scoring::ScorerError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<syntaprobe_core::Error>() {
            return if e.is_protocol() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}
