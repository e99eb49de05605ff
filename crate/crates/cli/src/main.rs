use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

mod analyze;
mod commands;
mod config;
mod run;

/// Rank noun properties, fuse text and vision rankings by concreteness, and
/// evaluate against semantic norms.
#[derive(Debug, Parser)]
#[command(name = "normfuse", version)]
struct Cli {
    /// `key = value` settings file; keys are long flag names and explicit
    /// flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Root seed; every component seed is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Norms file (pairs TSV or records JSONL).
    #[arg(long)]
    pub dataset: PathBuf,
    /// `pairs_tsv` or `records_jsonl`; guessed from the extension if omitted.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Concreteness source: `gold:<ratings.csv>` or `pred:<predictor.json>`.
    #[arg(long)]
    pub concreteness: Option<String>,
    /// Fallback for words without a gold rating: `lcs`, `embed` or `none`.
    #[arg(long, default_value = "lcs")]
    pub fallback: String,
    /// Word embeddings, needed by `--fallback embed` and predictors.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a norms file, write statistics, optionally split off a dev set.
    Ingest(IngestArgs),
    /// Aggregate adapter records into a score matrix.
    Aggregate(AggregateArgs),
    /// Turn a score matrix, or generated property lists, into a ranking.
    Rank(RankArgs),
    /// Fuse a text ranking with a vision ranking.
    Fuse(FuseArgs),
    /// Compute A@K, R@K and MRR for one or more rankings.
    Eval(EvalArgs),
    /// Rank-improvement, binning, band and other analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Concreteness lookup and the regression predictor.
    #[command(subcommand)]
    Concreteness(ConcretenessCommand),
    /// Baseline score matrices.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Evaluate fixed-weight fusion over a grid of weights.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    /// Number of nouns to hold out as a dev set.
    #[arg(long)]
    pub split_dev: Option<usize>,
    /// Norms files whose nouns may not enter the dev set.
    #[arg(long)]
    pub exclude: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    /// Adapter record file (lm_piece or embed records).
    #[arg(long)]
    pub records: PathBuf,
    /// Model id for embedding records, which carry none.
    #[arg(long)]
    pub model: Option<String>,
    /// Images used per noun.
    #[arg(long, default_value_t = normfuse::scoring::DEFAULT_IMAGE_BUDGET)]
    pub images: usize,
    /// Gap handling: `error` or `fill` (missing cells rank last).
    #[arg(long, default_value = "error")]
    pub missing: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Score matrix CSV with its `.meta.json` sidecar.
    #[arg(long, conflicts_with = "records", required_unless_present = "records")]
    pub matrix: Option<PathBuf>,
    /// Generated-record file, giving partial rankings.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Text-model ranking.
    #[arg(long)]
    pub text: PathBuf,
    /// Vision-model ranking.
    #[arg(long)]
    pub vision: PathBuf,
    /// `cem`, `fixed:<w>`, `random[:<seed>]`, `average`, `max` or `min`.
    #[arg(long, default_value = "cem")]
    pub strategy: String,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Output ranking name (file `<name>.ranking.jsonl`).
    #[arg(long, default_value = "fused")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    /// Ranking files; the model id is the file name without `.ranking.jsonl`.
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    /// Comma-separated ascending K list (default 1,5,10, or 1,2,3 when every noun has one gold property).
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Rank improvement of every gold pair.
    Ri(RiArgs),
    /// Mean rank improvement per concreteness bin.
    Bins(BinsArgs),
    /// Top-1 accuracy with gold reduced to the most, least or a random concrete property.
    Bands(BandsArgs),
    /// Nouns sharing an identical ordered top-K.
    Duplicates(DuplicatesArgs),
    /// Metrics restricted to multi-piece properties.
    Multipiece(MultipieceArgs),
    /// Corpus frequency of top-K predictions.
    Predfreq(PredfreqArgs),
    /// Metrics restricted to a listed subset of gold pairs.
    Subset(SubsetArgs),
}

#[derive(Debug, Args)]
pub struct RiArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub fused: PathBuf,
    #[arg(long)]
    pub base: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BinsArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub fused: PathBuf,
    #[arg(long)]
    pub base: PathBuf,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 10)]
    pub nbins: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// `most`, `least`, `random` or `all`.
    #[arg(long, default_value = "all")]
    pub band: String,
    /// Trials for the random band.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DuplicatesArgs {
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    /// Length of the compared top list.
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MultipieceArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    /// LM record file the piece counts are read from.
    #[arg(long)]
    pub records: PathBuf,
    /// Model whose piece counts apply (default: the only model in the records).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PredfreqArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    /// N-gram count table.
    #[arg(long)]
    pub ngrams: PathBuf,
    /// Predictions per noun.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long, required = true)]
    pub ranking: Vec<PathBuf>,
    /// `noun<TAB>property` pairs.
    #[arg(long)]
    pub subset: PathBuf,
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum ConcretenessCommand {
    /// Fit the ridge predictor on gold ratings.
    Train(TrainArgs),
    /// Predict concreteness for words or a dataset's properties.
    Predict(PredictArgs),
    /// Resolve every candidate property through a concreteness source.
    Lookup(LookupArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Ratings file with a `#scale=` header.
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Words excluded from training (one per line); scored after training.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    #[arg(long, default_value_t = normfuse::concreteness::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub predictor: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Words to score, one per line.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub words: Option<PathBuf>,
    /// Score this dataset's candidate properties.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LookupArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCommand {
    /// Uniform random scores.
    Random(BaselineRandomArgs),
    /// Cosine of noun and property word vectors.
    Embedding(BaselineEmbeddingArgs),
    /// Bigram frequency of property and noun.
    Ngram(BaselineNgramArgs),
}

#[derive(Debug, Args)]
pub struct BaselineRandomArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BaselineEmbeddingArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BaselineNgramArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub ngrams: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub vision: PathBuf,
    /// Comma-separated weights in [0, 1] (default 0.0 to 1.0 in steps of 0.1).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

fn dispatch(cli: Cli, args: Vec<String>) -> anyhow::Result<()> {
    use commands as c;
    match cli.command {
        Command::Ingest(a) => c::ingest(a, args),
        Command::Aggregate(a) => c::aggregate(a, args),
        Command::Rank(a) => c::rank(a, args),
        Command::Fuse(a) => c::fuse(a, args),
        Command::Eval(a) => c::eval(a, args),
        Command::Analyze(a) => analyze::analyze(a, args),
        Command::Concreteness(a) => c::concreteness(a, args),
        Command::Baseline(a) => c::baseline(a, args),
        Command::Sweep(a) => c::sweep(a, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NORMFUSE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let root = Cli::command();
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge(argv, &root) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let matches = match root.try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match dispatch(cli, config::effective_args(&argv)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
