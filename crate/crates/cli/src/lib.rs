//! The `braglab` command line.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 when a command
//! fails at run time.

mod analysis_cmd;
mod annotation_cmd;
mod corpus_cmd;
mod model_cmd;
pub mod plot;
pub mod rundir;
pub mod settings;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use rundir::MANIFEST;

/// Environment variable naming the default data root.
pub const DATA_DIR_ENV: &str = "BRAGLAB_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "braglab", version, about = "Build bragging corpora, measure agreement, train and evaluate bragging classifiers")]
pub struct Cli {
    /// Directory that receives one run directory per invocation.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a line-delimited corpus file and summarize it.
    Ingest(corpus_cmd::IngestArgs),
    /// Drop duplicates, non-English posts, retweets, quotes, URLs and empty posts.
    Filter(corpus_cmd::FilterArgs),
    /// Match a post pool against queries and sample the keyword pools.
    Sample(corpus_cmd::SampleArgs),
    /// Remove queries whose bragging hit rate is below a threshold.
    PruneQueries(corpus_cmd::PruneArgs),
    /// Build train/dev/test partitions.
    Split(corpus_cmd::SplitArgs),
    /// Compute lexicon, cluster, POS or self-disclosure features.
    Featurize(corpus_cmd::FeaturizeArgs),
    /// Train one model per seed and save checkpoints.
    Train(model_cmd::TrainArgs),
    /// Score saved checkpoints, or train-and-score a baseline, on the test set.
    Evaluate(model_cmd::EvaluateArgs),
    /// Per-class F1 as a function of the training-set fraction.
    LearningCurve(model_cmd::CurveArgs),
    /// Inter-annotator agreement from a record log.
    Agreement(annotation_cmd::AgreementArgs),
    /// Final labels from a record log, written into the corpus.
    AggregateLabels(annotation_cmd::AggregateArgs),
    /// Linguistic and popularity analyses.
    #[command(subcommand)]
    Analyze(analysis_cmd::AnalyzeCommand),
    /// Run the annotation service and browser interface.
    Serve(annotation_cmd::ServeArgs),
}

/// Resolves an input path: as given if it exists, else under the data root.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Some(root) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = Path::new(&root).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// Parses `argv` and runs the command, returning the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("BRAGLAB_LOG").try_init();
    match execute(&cli) {
        Ok(Some(dir)) => {
            println!("{}", dir.display());
            0
        }
        Ok(None) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<Option<PathBuf>> {
    let out = &cli.out;
    let dir = match &cli.command {
        Command::Ingest(a) => corpus_cmd::ingest(out, a)?,
        Command::Filter(a) => corpus_cmd::filter(out, a)?,
        Command::Sample(a) => corpus_cmd::sample(out, a)?,
        Command::PruneQueries(a) => corpus_cmd::prune(out, a)?,
        Command::Split(a) => corpus_cmd::split(out, a)?,
        Command::Featurize(a) => corpus_cmd::featurize(out, a)?,
        Command::Train(a) => model_cmd::train(out, a)?,
        Command::Evaluate(a) => model_cmd::evaluate(out, a)?,
        Command::LearningCurve(a) => model_cmd::learning_curve(out, a)?,
        Command::Agreement(a) => annotation_cmd::agreement(out, a)?,
        Command::AggregateLabels(a) => annotation_cmd::aggregate(out, a)?,
        Command::Analyze(a) => analysis_cmd::analyze(out, a)?,
        Command::Serve(a) => {
            annotation_cmd::serve(out, a)?;
            return Ok(None);
        }
    };
    Ok(Some(dir))
}
