use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "laysum",
    version,
    about = "Retrieval-augmented lay summarization toolkit"
)]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL corpus or passage file and report split counts.
    Ingest(IngestArgs),
    /// Build a BM25 index from a passage file.
    Index(IndexArgs),
    /// Search an index, optionally reranking the top hits.
    Retrieve(RetrieveArgs),
    /// Readability scores of a text file.
    Readability(ReadabilityArgs),
    /// ROUGE-1/2/L between a hypothesis and a reference file.
    Rouge(RougeArgs),
    /// Reward components for a readability score.
    Reward(RewardArgs),
    /// Train the candidate-selection policy with PPO.
    #[command(name = "ppo-train")]
    PpoTrain(PpoTrainArgs),
    /// Run the retrieval-augmented pipeline over a corpus.
    Run(RunArgs),
    /// Evaluation report over prediction/reference pairs.
    Evaluate(EvaluateArgs),
    /// Gold-passage hit rate at 1, 5 and 20.
    #[command(name = "hit-rate")]
    HitRate(HitRateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Corpus,
    Passages,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Corpus)]
    pub kind: InputKind,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub passages: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 20)]
    pub topk: usize,
    /// Rerank the retrieved hits and keep this many.
    #[arg(long)]
    pub rerank: Option<usize>,
    /// Use the offline lexical scorer even when a bridge is configured.
    #[arg(long)]
    pub mock: bool,
}

#[derive(Debug, Args)]
pub struct ReadabilityArgs {
    #[arg(long)]
    pub text: PathBuf,
    /// Dale-Chall familiar-word list, one word per line.
    #[arg(long)]
    pub familiar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RougeArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("score").required(true).args(["fre", "fkgl"])))]
pub struct RewardArgs {
    #[arg(long)]
    pub fre: Option<f64>,
    #[arg(long)]
    pub fkgl: Option<f64>,
    /// Relevance in [0, 1]; with --words, also computes the composite.
    #[arg(long, requires = "words")]
    pub relevance: Option<f64>,
    #[arg(long, requires = "relevance")]
    pub words: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpoTrainArgs {
    /// JSONL of candidate sets.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Only run documents of this split.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Use the deterministic mock generator instead of a bridge.
    #[arg(long)]
    pub mock: bool,
    /// Directory for results.jsonl, report.md and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL of {"id"?, "prediction", "reference"}.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub familiar: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Ignore any configured bridge.
    #[arg(long)]
    pub mock: bool,
    /// Directory for report.md and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bm25,
    Lexical,
    Oracle,
    Bridge,
}

#[derive(Debug, Args)]
pub struct HitRateArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// JSONL of {"query", "gold"} with gold passage ids.
    #[arg(long)]
    pub eval: PathBuf,
    /// Methods to compare; defaults to bm25 and lexical, plus bridge when configured.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<Method>,
}
