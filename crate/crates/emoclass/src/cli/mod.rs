//! Command-line surface: embedding, training, evaluation, prediction,
//! baselines, and report generation.
//!
//! Results go to standard output; diagnostics go to standard error. Exit
//! codes are stable: 0 success, 2 configuration errors (bad flags, missing
//! input files), 3 data errors (parsing, schema mismatches), 4 missing
//! embeddings.

mod commands;
mod config;

pub use config::RunConfig;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

use crate::embeddings::{DEFAULT_ENCODER_DIM, DEFAULT_HASHING_DIM, DEFAULT_MAX_TOKENS};

/// Stable process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MISSING_EMBEDDINGS: i32 = 4;

/// Error carrying its exit code; the message goes to standard error.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn missing_embeddings(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MISSING_EMBEDDINGS,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "emoclass", version, about = "Multi-label emotion classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed a corpus with the deterministic hashing backend.
    EmbedHash(EmbedHashArgs),
    /// Embed a corpus through a remote encoder service.
    EmbedRemote(EmbedRemoteArgs),
    /// Train the classification head, one run per seed.
    Train(TrainArgs),
    /// Evaluate a trained head on a labeled test file.
    Eval(EvalArgs),
    /// Predict emotions for one text with a trained head.
    Predict(PredictArgs),
    /// Classical multi-output baselines.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Render score tables and leaderboard comparisons.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Args)]
struct EmbedHashArgs {
    /// Corpus CSV to embed.
    #[arg(long)]
    input: String,
    /// Language code used for the schema.
    #[arg(long)]
    language: String,
    /// Split tag; becomes the key prefix in the store.
    #[arg(long, default_value = "train")]
    split: String,
    /// Embedding dimensionality.
    #[arg(long, default_value_t = DEFAULT_HASHING_DIM)]
    dim: usize,
    /// Token budget per text.
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    /// Hash seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output store path.
    #[arg(long)]
    out: String,
    /// Add to an existing store instead of overwriting it, so one store can
    /// cover several splits.
    #[arg(long, default_value_t = false)]
    append: bool,
}

#[derive(Debug, Args)]
struct EmbedRemoteArgs {
    #[arg(long)]
    input: String,
    #[arg(long)]
    language: String,
    #[arg(long, default_value = "train")]
    split: String,
    /// Encoder service base URL.
    #[arg(long)]
    endpoint: String,
    #[arg(long, default_value_t = DEFAULT_ENCODER_DIM)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    #[arg(long)]
    out: String,
    /// Texts per request.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Add to an existing store instead of overwriting it.
    #[arg(long, default_value_t = false)]
    append: bool,
}

#[derive(Debug, Args, Default)]
struct TrainArgs {
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    train_csv: Option<String>,
    #[arg(long)]
    dev_csv: Option<String>,
    /// Embeddings store covering the train and dev splits.
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long)]
    language: Option<String>,
    /// Seeds, comma separated; one checkpoint per seed.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Checkpoint path stem; each run writes <stem>.seed<k><ext>.
    #[arg(long)]
    out_model: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    dropout_rate: Option<f64>,
    #[arg(long)]
    smoothing_alpha: Option<f64>,
    #[arg(long)]
    clip_max_norm: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Embedder identity recorded in the checkpoints. Defaults to the
    /// opaque store identity; pass the identity printed by embed-hash or
    /// embed-remote so `predict` can re-embed new text.
    #[arg(long)]
    fingerprint: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Trained head checkpoint.
    #[arg(long)]
    model: String,
    #[arg(long)]
    test_csv: String,
    #[arg(long)]
    embeddings: String,
    /// Split tag used for store keys.
    #[arg(long, default_value = "test")]
    split: String,
    /// Output format on standard output.
    #[arg(long, default_value = "table")]
    format: String,
    /// Optional report file.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    text: String,
    /// Override the model's decision threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Encoder service URL, required for remote-embedding models.
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Debug, Subcommand)]
enum BaselineCommand {
    /// Fit a multi-output baseline.
    Fit(BaselineFitArgs),
    /// Predict emotions for one text with a fitted baseline.
    Predict(BaselinePredictArgs),
}

#[derive(Debug, Args)]
struct BaselineFitArgs {
    /// Learner kind: logreg or gnb.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    train_csv: String,
    #[arg(long)]
    language: String,
    /// Precomputed embeddings store; omit to embed with the hashing backend.
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long, default_value = "train")]
    split: String,
    #[arg(long, default_value_t = DEFAULT_HASHING_DIM)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_model: String,
    #[arg(long, default_value_t = 1e-4)]
    l2_penalty: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BaselinePredictArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    text: String,
    /// Encoder service URL, required for remote-embedding models.
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Debug, Subcommand)]
enum ReportCommand {
    /// Render a stored per-language score table.
    Scores(ReportScoresArgs),
    /// Compare per-language macro F1 against a reference leaderboard.
    Leaderboard(ReportLeaderboardArgs),
}

#[derive(Debug, Args)]
struct ReportScoresArgs {
    /// Tab-separated score rows (language, six emotion F1 cells, micro, macro).
    #[arg(long)]
    scores: String,
    /// table or json-like.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Debug, Args)]
struct ReportLeaderboardArgs {
    #[arg(long)]
    scores: String,
    /// Reference rows: language, 1st team, score, 2nd team, score.
    #[arg(long)]
    reference: String,
    #[arg(long, default_value = "table")]
    format: String,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::EmbedHash(args) => commands::embed_hash(&args),
        Command::EmbedRemote(args) => commands::embed_remote_cmd(&args),
        Command::Train(args) => commands::train(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Predict(args) => commands::predict(&args),
        Command::Baseline(BaselineCommand::Fit(args)) => commands::baseline_fit(&args),
        Command::Baseline(BaselineCommand::Predict(args)) => commands::baseline_predict(&args),
        Command::Report(ReportCommand::Scores(args)) => commands::report_scores(&args),
        Command::Report(ReportCommand::Leaderboard(args)) => commands::report_leaderboard(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
