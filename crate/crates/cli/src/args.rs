use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Build position-aware retrieval benchmarks, run retrievers over them and
/// measure how scores change with the position of the relevant content.
#[derive(Debug, Parser)]
#[command(name = "myopic", version)]
pub struct Cli {
    /// TOML configuration file; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for data-parallel steps [default: all cores].
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Log more detail to standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or sample benchmark bundles.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Fetch or compute embeddings.
    #[command(subcommand)]
    Embed(EmbedCommand),
    /// Retrieve passages for every query and write a TREC run file.
    Run(RunArgs),
    /// Score a run per position group.
    Eval(EvalArgs),
    /// Compare full-text and segment embeddings.
    Diagnose(DiagnoseArgs),
    /// Combine saved JSON reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Build the offset-binned benchmark from SQuAD v2 JSON files.
    BuildSquad(BuildSquadArgs),
    /// Generate position-tagged questions for long passages with a chat model.
    BuildFineweb(BuildFinewebArgs),
    /// Draw a smaller query sample from an existing bundle.
    Sample(SampleArgs),
}

#[derive(Debug, Subcommand)]
pub enum EmbedCommand {
    /// Embed a bundle's corpus and queries into JSONL vector files.
    Fetch(EmbedFetchArgs),
}

#[derive(Debug, Args)]
pub struct BuildSquadArgs {
    /// SQuAD v2 JSON files (for example train and dev).
    #[arg(long = "input", required = true, value_name = "FILE")]
    pub inputs: Vec<PathBuf>,
    /// Output bundle directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Interior bin edges; the closing edge is the largest answer offset.
    #[arg(long, value_delimiter = ',', value_name = "EDGES")]
    pub bins: Option<Vec<usize>>,
    /// Whether an offset equal to an interior edge belongs to both bins.
    #[arg(long, value_name = "BOOL")]
    pub inclusive_bins: Option<bool>,
    /// Also write a sample of this many queries to `<out>/tiny`.
    #[arg(long, alias = "tiny", value_name = "N")]
    pub tiny_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also print an answer-offset histogram with this bucket width.
    #[arg(long, value_name = "CHARS")]
    pub histogram_width: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildFinewebArgs {
    /// Passage JSONL with `id` and `text` fields.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_name = "N")]
    pub min_words: Option<usize>,
    #[arg(long, value_name = "N")]
    pub max_words: Option<usize>,
    #[arg(long, value_name = "WORDS")]
    pub chunk_size: Option<usize>,
    /// Use a built-in offline chat model instead of the configured provider.
    #[arg(long)]
    pub stub: bool,
    /// Also write a sample with this many queries per segment tag to `<out>/tiny`.
    #[arg(long, value_name = "N")]
    pub per_tag: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for cached chat responses.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Uniform sample of N queries.
    #[arg(long, value_name = "N", conflicts_with = "per_tag", required_unless_present = "per_tag")]
    pub tiny_n: Option<usize>,
    /// N queries per segment tag, deduplicated.
    #[arg(long, value_name = "N")]
    pub per_tag: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VectorKind {
    Dense,
    Multivector,
}

#[derive(Debug, Args)]
pub struct EmbedderArgs {
    /// `http` for the configured provider, or `synthetic:<mode>` with mode
    /// `uniform_average`, `position_decay:<lambda>` or `first_k:<k>`.
    #[arg(long, value_name = "SPEC")]
    pub embedder: Option<String>,
    /// Dimension of synthetic embeddings.
    #[arg(long, value_name = "N")]
    pub dim: Option<usize>,
    /// Embedding cache directory.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EmbedFetchArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    /// Directory receiving `corpus.jsonl` and `queries.jsonl` vector files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    pub kind: VectorKind,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scorer {
    Bm25,
    Dense,
    Colbert,
    #[value(name = "rerank-over-bm25")]
    RerankOverBm25,
    #[value(name = "rerank-over-dense")]
    RerankOverDense,
    #[value(name = "rerank-over-colbert")]
    RerankOverColbert,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    #[arg(long, value_enum)]
    pub scorer: Scorer,
    /// Output TREC run file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Passages kept per query.
    #[arg(long)]
    pub k: Option<usize>,
    /// Run tag written in the last column [default: the scorer name].
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Precomputed vectors from `embed fetch`.
    #[arg(long, value_name = "DIR")]
    pub vectors: Option<PathBuf>,
    /// Keep multivector rows as provided instead of scaling them to unit length.
    #[arg(long)]
    pub no_normalize: bool,
    /// `stub` for offline term-overlap scoring, or `http` for the configured provider.
    #[arg(long, value_name = "SPEC")]
    pub reranker: Option<String>,
    /// First-stage candidates passed to the reranker.
    #[arg(long, value_name = "N")]
    pub top_n: Option<usize>,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR", required_unless_present = "compare")]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "compare")]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Output formats: json, csv, markdown, plot-data.
    #[arg(long = "format", value_delimiter = ',', value_name = "FORMAT")]
    pub formats: Vec<String>,
    /// Directory for report files; without it the first format goes to standard output.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when the head-tail delta exceeds this value.
    #[arg(long, value_name = "DELTA")]
    pub fail_if_delta_above: Option<f64>,
    /// Compare two JSON reports and print the largest per-group gap.
    #[arg(long, num_args = 2, value_names = ["FULL", "TINY"], conflicts_with_all = ["bundle", "run"])]
    pub compare: Option<Vec<PathBuf>>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Passage JSONL or a bundle directory.
    #[arg(long, value_name = "PATH")]
    pub passages: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Random sample of this many passages after length filtering.
    #[arg(long, value_name = "N")]
    pub sample_n: Option<usize>,
    #[arg(long, value_name = "N")]
    pub min_words: Option<usize>,
    #[arg(long, value_name = "N")]
    pub max_words: Option<usize>,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON reports written by `eval`.
    #[arg(required = true, value_name = "REPORT")]
    pub inputs: Vec<PathBuf>,
    /// Output format: markdown, csv or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
