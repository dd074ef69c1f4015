//! `direval` command-line harness.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 internal error.

use std::ffi::OsString;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod output;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<direval::Error> for Failure {
    fn from(e: direval::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "direval", version, about = "Dialogue response evaluation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run manifest path [default: <out>.manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "DIREVAL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Default)]
pub struct LexiconArgs {
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Synonym lexicon: `word<TAB>syn1,syn2` per line.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// POS lexicon: `word<TAB>TAG[,TAG]` per line.
    #[arg(long)]
    pub pos_lexicon: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a dataset and print corpus statistics.
    Ingest {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Partition contexts into train/valid/test and write a split manifest.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train: f64,
        #[arg(long, default_value_t = 0.1)]
        valid: f64,
        #[arg(long, default_value_t = 0.1)]
        test: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fill every context's random negatives with responses from other contexts.
    SampleNegatives {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Responses with fewer words are never sampled.
        #[arg(long, default_value_t = direval::corpus::DEFAULT_MIN_WORDS)]
        min_words: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Score every candidate with one metric and write a score file.
    Score(ScoreArgs),
    /// Threshold, accuracy, point-biserial correlation and quartiles for a score file.
    Evaluate(EvaluateArgs),
    /// Apply a synthetic transformation to every positive response.
    Mutate {
        #[arg(long)]
        dataset: PathBuf,
        /// reverse, jumble, nouns_only, drop_punct, drop_stopwords or synonym_swap.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        swap_rate: f64,
        #[command(flatten)]
        lexicons: LexiconArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Conicity of positive, random and adversarial response vectors per context.
    Conicity {
        /// Sentence vectors: {"candidate_id","context_id","candidate_type","vector"} per line.
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        split_manifest: Option<PathBuf>,
        /// Restrict to one slice of the split manifest.
        #[arg(long, requires = "split_manifest")]
        slice: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Correlate a score file with human ratings.
    Correlate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Significance of the difference between two metrics' score files.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, required_unless_present = "instances", conflicts_with = "instances")]
    pub dataset: Option<PathBuf>,
    /// Pre-built instances (e.g. mutate output) instead of a dataset.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// bleu1..bleu4, deltableu[1-4], rougel, meteor, embavg, extrema, greedy, bertscore.
    #[arg(long)]
    pub metric: String,
    /// single, multi-max, multi-avg, standard or delta [default: delta for deltableu, else multi-max].
    #[arg(long)]
    pub refs: Option<String>,
    #[arg(long, default_value = "random")]
    pub negatives: String,
    /// Word vectors in text format: `word v1 … vd` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Contextual token vectors for BERTScore.
    #[arg(long)]
    pub ctx_embeddings: Option<PathBuf>,
    /// abs or signed_max.
    #[arg(long, default_value = "abs")]
    pub extrema: String,
    /// Drop candidates a metric cannot score (e.g. no in-vocabulary token) instead of failing.
    #[arg(long)]
    pub skip_degenerate: bool,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Score files; several are merged (candidate ids must stay unique).
    #[arg(long, required = true)]
    pub scores: Vec<PathBuf>,
    /// Fit the threshold on `valid` and report on `test`.
    #[arg(long)]
    pub split_manifest: Option<PathBuf>,
    /// `grid` or a fixed threshold such as 0.5.
    #[arg(long, default_value = "grid")]
    pub threshold: String,
    /// auto, identity or cosine; cosine maps x to (x+1)/2 before thresholding.
    #[arg(long, default_value = "auto")]
    pub transform: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scores_a: PathBuf,
    #[arg(long)]
    pub scores_b: PathBuf,
    /// Correlate with human ratings instead of binary labels.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long)]
    pub split_manifest: Option<PathBuf>,
    #[arg(long, default_value = "grid")]
    pub threshold: String,
    #[arg(long, default_value = "auto")]
    pub transform: String,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Parses arguments and runs one command, mapping failures to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| commands::dispatch(cli.command))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("direval: {failure}");
            ExitCode::from(failure.exit_code())
        }
        Err(_) => {
            eprintln!("direval: internal error");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
