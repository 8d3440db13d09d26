//! Single-binary pipeline: ingestion -> network metrics -> polarity ->
//! group statistics / prediction, plus a synthetic-dataset generator.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

mod commands;
mod config;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<echograph::ingest::IngestError> for CliError {
    fn from(e: echograph::ingest::IngestError) -> Self {
        match e {
            echograph::ingest::IngestError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

macro_rules! validation_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::validation(e.to_string())
            }
        }
    )*};
}

validation_from!(
    echograph::graph::GraphError,
    echograph::metrics::MetricsError,
    echograph::polarity::PolarityError,
    echograph::stats::StatsError,
    echograph::synth::SynthError,
    echograph::predict::PredictError
);

#[derive(Parser)]
#[command(name = "echograph", version, about = "Echo-chamber analytics over follow graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for all randomized steps.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (env ECHOGRAPH_THREADS as fallback). Results do not
    /// depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone, Default)]
pub struct InputArgs {
    /// Directory with a dataset in synth layout (edges.tsv, tweets.jsonl,
    /// profiles.jsonl, leaning.csv); explicit path flags win.
    #[arg(long = "in", value_name = "DIR")]
    input_dir: Option<PathBuf>,
    /// Tab-separated follower<TAB>followee edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Newline-delimited JSON tweet records.
    #[arg(long)]
    tweets: Option<PathBuf>,
    /// Newline-delimited JSON profile records.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// domain,score table with alias,=,canonical rows.
    #[arg(long)]
    leaning_table: Option<PathBuf>,
    /// Optional user_id,score table of signed user polarities.
    #[arg(long)]
    user_polarity: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
pub struct FilterArgs {
    /// Minimum observations for a polarity to be defined.
    #[arg(long)]
    min_obs: Option<usize>,
    /// Keep only users with at least this many tweets (0 disables).
    #[arg(long)]
    min_topic_tweets: Option<usize>,
    /// Disable the bot checks even when profiles are available.
    #[arg(long)]
    no_bot_filter: bool,
    /// Filter ordering: bots_first or activity_first.
    #[arg(long)]
    filter_order: Option<String>,
    #[arg(long)]
    max_tweets_per_day: Option<f64>,
    #[arg(long)]
    min_tweets_per_day: Option<f64>,
    #[arg(long)]
    min_followers: Option<u64>,
    #[arg(long)]
    min_friends: Option<u64>,
    #[arg(long)]
    min_account_age_days: Option<u64>,
}

#[derive(Args, Clone, Default)]
pub struct DeltaArgs {
    /// Focal role threshold.
    #[arg(long)]
    delta: Option<f64>,
    /// Threshold grid as lo:hi:step, e.g. 0.2:0.45:0.05.
    #[arg(long, value_name = "LO:HI:STEP")]
    delta_grid: Option<String>,
}

#[derive(Args, Clone, Default)]
pub struct ForestArgs {
    /// Trees in the random forest.
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth (unlimited when absent).
    #[arg(long)]
    max_depth: Option<usize>,
    /// n-gram vocabulary cap.
    #[arg(long)]
    vocab_cap: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Clone, Default)]
pub struct SynthArgs {
    #[arg(long)]
    n_left: Option<usize>,
    #[arg(long)]
    n_right: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    #[arg(long)]
    tweets_per_user: Option<f64>,
    #[arg(long)]
    link_fraction: Option<f64>,
    #[arg(long)]
    leaning_noise: Option<f64>,
    #[arg(long)]
    gatekeeper_fraction: Option<f64>,
    #[arg(long)]
    domains_per_side: Option<usize>,
    #[arg(long)]
    tokens_per_tweet: Option<usize>,
    #[arg(long)]
    token_pool_size: Option<usize>,
    #[arg(long)]
    token_overlap: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs, apply user filters, and write the canonical edge
    /// list plus an ingest report.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
    },
    /// PageRank, clustering coefficients, and degrees.
    Metrics {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
    },
    /// Per-user polarity summaries and role labels, one file per delta.
    Polarity {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
        #[command(flatten)]
        deltas: DeltaArgs,
    },
    /// Welch-test comparison tables over the delta grid.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
        #[command(flatten)]
        deltas: DeltaArgs,
        /// Significance level.
        #[arg(long)]
        alpha: Option<f64>,
        /// Grid entries that must agree for a verdict.
        #[arg(long)]
        k_significant: Option<usize>,
    },
    /// Production-vs-consumption scatter data.
    Scatter {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
    },
    /// Kernel-density beanplot data per feature, partisan vs bipartisan.
    Beanplot {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
        #[command(flatten)]
        deltas: DeltaArgs,
        /// Comma-separated feature names.
        #[arg(long)]
        features: Option<String>,
    },
    /// Train role classifiers and report cross-validated accuracy.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
        #[command(flatten)]
        deltas: DeltaArgs,
        #[command(flatten)]
        forest: ForestArgs,
    },
    /// Generate a synthetic polarized dataset.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Run every stage end to end.
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        filters: FilterArgs,
        #[command(flatten)]
        deltas: DeltaArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        k_significant: Option<usize>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    match run(cli) {
        Ok(()) => {}
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            common,
            inputs,
            filters,
        } => commands::ingest(&common, &inputs, &filters),
        Command::Metrics {
            common,
            inputs,
            filters,
        } => commands::metrics(&common, &inputs, &filters),
        Command::Polarity {
            common,
            inputs,
            filters,
            deltas,
        } => commands::polarity(&common, &inputs, &filters, &deltas),
        Command::Compare {
            common,
            inputs,
            filters,
            deltas,
            alpha,
            k_significant,
        } => commands::compare(&common, &inputs, &filters, &deltas, alpha, k_significant),
        Command::Scatter {
            common,
            inputs,
            filters,
        } => commands::scatter(&common, &inputs, &filters),
        Command::Beanplot {
            common,
            inputs,
            filters,
            deltas,
            features,
        } => commands::beanplot(&common, &inputs, &filters, &deltas, features.as_deref()),
        Command::Predict {
            common,
            inputs,
            filters,
            deltas,
            forest,
        } => commands::predict(&common, &inputs, &filters, &deltas, &forest),
        Command::Synth { common, synth } => commands::synth(&common, &synth),
        Command::Pipeline {
            common,
            inputs,
            filters,
            deltas,
            forest,
            alpha,
            k_significant,
        } => commands::pipeline(
            &common,
            &inputs,
            &filters,
            &deltas,
            &forest,
            alpha,
            k_significant,
        ),
    }
}
