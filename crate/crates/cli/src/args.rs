use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use transbench_core::prompting::PromptVariant;
use transbench_core::selftrain::CorpusMode;

#[derive(Debug, Parser)]
#[command(name = "transbench", version, about = "Benchmark and improve code translation models by execution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one test program per (problem, profile).
    GenTests(GenTestsArgs),
    /// Translate directly and score computational accuracy.
    Translate(TranslateArgs),
    /// Translate through a verified intermediate.
    Intermediary(IntermediaryArgs),
    /// Build a fine-tuning corpus from API-seeded functions.
    Selftrain(SelftrainArgs),
    /// Aggregate matrices, outcome logs and base-vs-tuned scores.
    Report(ReportArgs),
    /// Re-run a recorded bundle against its exchange log.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Directory of problem documents; the shipped sample set if omitted.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    /// Comma-separated profile ids or profile JSON files.
    #[arg(long, value_delimiter = ',')]
    pub profiles: Vec<String>,
    /// Parallel jobs for execution and model calls.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Replay completions from a recorded exchange log instead of calling a model.
    #[arg(long, conflicts_with = "oracle")]
    pub fixture: Option<PathBuf>,
    /// Answer with canonical solutions instead of calling a model.
    #[arg(long)]
    pub oracle: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Global RNG seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PromptArgs {
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value = "with_target_signature")]
    pub variant: PromptVariant,
    #[arg(long, default_value_t = 2)]
    pub shots: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GenTestsArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub prompt: PromptArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IntermediaryArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub prompt: PromptArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// `style_transfer` or `via_language` (with --il-lang).
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub il_lang: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SelftrainArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub prompt: PromptArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON-lines API list.
    #[arg(long)]
    pub apis: PathBuf,
    #[arg(long, default_value = "pass1")]
    pub mode: CorpusMode,
    #[arg(long, default_value_t = 1)]
    pub per_api: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// CA matrix files (JSON, or CSV with source,target,ca columns).
    #[arg(long)]
    pub matrix: Vec<PathBuf>,
    /// Outcome logs to aggregate into matrices.
    #[arg(long)]
    pub outcomes: Vec<PathBuf>,
    /// Base scores (CSV with a key column and a ca column).
    #[arg(long, requires = "tuned")]
    pub base: Option<PathBuf>,
    #[arg(long, requires = "base")]
    pub tuned: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Output directory of a previous translate, intermediary or selftrain run.
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
}
