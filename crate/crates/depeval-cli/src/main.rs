//! depeval — treebank validation, output sanitization, attachment scoring,
//! tree similarity, and cached LLM parsing runs from one binary.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use depeval::llm::{LlmError, TransportError};
use depeval::treedist::LabelMode;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "depeval",
    version,
    about = "Dependency parse evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a CoNLL file and report every violation
    Validate(ValidateArgs),
    /// Drop predictions whose forms cannot be aligned with gold
    Sanitize(SanitizeArgs),
    /// UAS/LAS with label-confusion and root-error reports
    Score(ScoreArgs),
    /// Tree edit distance scores for paired sentences of two files
    Dted(DtedArgs),
    /// Select the top-k structurally similar cross-bank sentence pairs
    Pairs(PairsArgs),
    /// Prompt a model for a parse of every sentence, cache-first
    Run(RunArgs),
    /// Gold pair selection, cached parsing, sanitization, and consistency
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Universal Dependencies conventions: punctuation kept.
    Ud,
    /// PTB/CTB-style evaluation: punctuation excluded.
    Ptb,
}

fn parse_label_mode(s: &str) -> Result<LabelMode, String> {
    LabelMode::from_str(s).map_err(|e| e.to_string())
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// CoNLL file to check
    file: PathBuf,
    /// strict drops violating sentences, lenient keeps what it can
    #[arg(long, default_value = "strict")]
    mode: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Directory for the report and run manifest
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SanitizeArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Newline-separated sensitive-word list
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Defect classes to keep in the filtered output despite not aligning
    /// (comma separated; the report is unaffected)
    #[arg(long, value_delimiter = ',')]
    keep_classes: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ScoreArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Dataset profile choosing the punctuation default
    #[arg(long, value_enum, default_value_t = Profile::Ud)]
    profile: Profile,
    /// Override the profile's punctuation handling
    #[arg(long)]
    exclude_punct: Option<bool>,
    /// Confusion entries to report
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Count label confusion on every token, not only correctly attached
    #[arg(long)]
    all_tokens: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DtedArgs {
    #[arg(long = "file-a")]
    file_a: PathBuf,
    #[arg(long = "file-b")]
    file_b: PathBuf,
    #[arg(long, default_value = "structural", value_parser = parse_label_mode)]
    label_mode: LabelMode,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PairsArgs {
    #[arg(long = "file-a")]
    file_a: PathBuf,
    #[arg(long = "file-b")]
    file_b: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[arg(long, default_value = "structural", value_parser = parse_label_mode)]
    label_mode: LabelMode,
    /// Only score pairs whose lengths differ by at most this many tokens
    #[arg(long, default_value_t = 3)]
    length_window: usize,
    /// Let a sentence appear in more than one pair
    #[arg(long)]
    allow_repeats: bool,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct LlmArgs {
    /// Prompt template JSON file
    #[arg(long)]
    template: PathBuf,
    /// Chat-completions endpoint URL
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    endpoint: String,
    #[arg(long, default_value = "gpt-3.5-turbo")]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    /// Environment variable holding the API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    /// Response cache directory (one JSON file per request)
    #[arg(long)]
    cache_dir: PathBuf,
    /// Replay from the cache only; a miss is an error, not a request
    #[arg(long)]
    offline: bool,
    /// Concurrent requests
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    llm: LlmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PipelineArgs {
    #[arg(long = "gold-a")]
    gold_a: PathBuf,
    #[arg(long = "gold-b")]
    gold_b: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[arg(long, default_value = "structural", value_parser = parse_label_mode)]
    label_mode: LabelMode,
    #[arg(long, default_value_t = 3)]
    length_window: usize,
    #[arg(long)]
    allow_repeats: bool,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };

    let result = match cli.command {
        Command::Validate(args) => commands::validate(args),
        Command::Sanitize(args) => commands::sanitize(args),
        Command::Score(args) => commands::score(args),
        Command::Dted(args) => commands::dted(args),
        Command::Pairs(args) => commands::pairs(args),
        Command::Run(args) => commands::run(args),
        Command::Pipeline(args) => commands::pipeline(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}

/// 1 for input and contract errors, 2 for transport trouble.
fn exit_code(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if cause.downcast_ref::<TransportError>().is_some() {
            return 2;
        }
        if let Some(llm) = cause.downcast_ref::<LlmError>() {
            match llm {
                LlmError::Http { .. } | LlmError::Exhausted { .. } => return 2,
                _ => return 1,
            }
        }
    }
    1
}
