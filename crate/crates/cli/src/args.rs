use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "polarq", version, about = "Mine, label and benchmark yes-no questions with indirect answers")]
pub struct Cli {
    /// Seed for every sampling step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the rule pipeline over a corpus.
    Mine(MineArgs),
    /// Map an English corpus onto Yes, No and Middle.
    MapLabels(MapLabelsArgs),
    /// Write per-epoch blending manifests.
    BlendPlan(BlendArgs),
    /// Greedy forward selection of auxiliary datasets.
    Greedy(GreedyArgs),
    /// McNemar's test on two prediction files.
    Mcnemar(McnemarArgs),
    /// Precision, recall and F1 of predictions against gold labels.
    Score(ScoreArgs),
    /// Seeded 20/80 validation/test split.
    Split(SplitArgs),
    /// Linearly weighted Cohen's kappa between annotators.
    Kappa(KappaArgs),
    /// Sample or score audit sheets.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Label distribution of a labeled dataset.
    Stats(StatsArgs),
    /// Rank language pairs by feature-vector cosine.
    Similarity(SimilarityArgs),
    /// Inspect or export rule packs.
    #[command(subcommand)]
    Pack(PackCommand),
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// JSON-lines corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus layout: flat-turns, threaded-replies or faq-pairs.
    #[arg(long)]
    pub profile: String,
    /// Built-in pack code or path to a pack file.
    #[arg(long)]
    pub pack: String,
    #[arg(long)]
    pub out_direct: PathBuf,
    #[arg(long)]
    pub out_indirect: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Source name recorded on every pair (defaults to the corpus file name).
    #[arg(long)]
    pub source: Option<String>,
    /// Evaluate every answer constraint even after the first failure.
    #[arg(long)]
    pub full_trace: bool,
}

#[derive(Debug, Args)]
pub struct MapLabelsArgs {
    /// circa-relaxed, swda-ia or friends-qia.
    #[arg(long)]
    pub scheme: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "question")]
    pub question_field: String,
    #[arg(long, default_value = "answer")]
    pub answer_field: String,
    #[arg(long, default_value = "context")]
    pub context_field: String,
    #[arg(long, default_value = "label")]
    pub label_field: String,
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    /// Gold dataset as `id:size` (repeatable).
    #[arg(long, num_args = 1..)]
    pub gold: Vec<String>,
    /// Noisy dataset as `id:size` (repeatable).
    #[arg(long, num_args = 1..)]
    pub noisy: Vec<String>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GreedyArgs {
    /// Comma-separated base dataset ids.
    #[arg(long, value_delimiter = ',', default_value = "")]
    pub base: Vec<String>,
    /// Comma-separated candidate dataset ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub candidates: Vec<String>,
    /// Evaluator command line, split with shell quoting rules.
    #[arg(long, required_unless_present = "lookup", conflicts_with = "lookup")]
    pub evaluator: Option<String>,
    /// JSON object mapping comma-joined dataset sets to scores, used instead of an evaluator.
    #[arg(long)]
    pub lookup: Option<PathBuf>,
    /// Validation set path passed to the evaluator.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Seconds per evaluation.
    #[arg(long, default_value_t = 3600.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub retries: u32,
    /// Search report (JSON), written on success and on failure.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct McnemarArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Labeled JSON-lines dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// One label file per annotator (at least two).
    #[arg(required = true, num_args = 2..)]
    pub annotators: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    QuestionDetection,
    Interpretation,
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Draw a seeded sample into a TSV sheet with an empty human column.
    Sample {
        /// Mined JSON-lines file (direct dataset or indirect candidates).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long = "type", value_enum)]
        audit: AuditKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision from a completed sheet.
    Score {
        #[arg(long)]
        sheet: PathBuf,
        #[arg(long = "type", value_enum)]
        audit: AuditKind,
    },
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Labeled JSON-lines dataset.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Tab-separated feature table.
    #[arg(long)]
    pub vectors: PathBuf,
    /// Comma-separated evaluation languages.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eval: Vec<String>,
    /// Comma-separated supervision languages.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sup: Vec<String>,
    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PackCommand {
    /// Print every predicate and keyword with its gloss.
    Show {
        /// Built-in pack code.
        #[arg(required_unless_present = "file", conflicts_with = "file")]
        language: Option<String>,
        /// Pack file instead of a built-in pack.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Write a built-in pack as an editable TOML file.
    Export {
        language: String,
        #[arg(long)]
        out: PathBuf,
    },
}
