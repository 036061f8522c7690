//! `trendrec` — pipeline orchestration for the trend-responsive
//! recommendation system: ingest → topics → profiles → segments →
//! serving/simulation → insights, driven by one JSON config file.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Command failure, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit 1.
    Usage(String),
    /// Missing or malformed input data or artifacts: exit 2.
    Data(String),
    /// Everything else: exit 3.
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<trendrec::Error> for CliError {
    fn from(e: trendrec::Error) -> Self {
        use trendrec::Error::*;
        match e {
            Json(_) | Io { .. } | NoValidArticles(_) | EmptyVocabulary | UnknownSection(_)
            | TooFewDocuments { .. } | TooFewProfiles { .. } | TooFewUsers(_)
            | TooFewSegments(_) | EmptyHeldOut | InvalidScenario(_) | InvalidConfig(_)
            | EmptyPool | UnsplittableClusters { .. } => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "trendrec", version, about = "Trend-responsive news recommendation pipeline")]
struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, global = true, default_value = "trendrec.json")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the LDA topic model over all articles.
    TrainTopics {
        /// Override topics.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build standardized user interest profiles from recent events.
    BuildProfiles,
    /// Cluster users with bisecting k-means (general | hot | site).
    Segment {
        /// Override segments.variant.
        #[arg(long)]
        variant: Option<String>,
        /// Section for the site variant; overrides segments.section.
        #[arg(long)]
        section: Option<String>,
        /// Override segments.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print and store the per-segment topic descriptions.
    DescribeSegments,
    /// Sweep (knowledge window, epsilon) candidates on a scenario.
    SimulateSweep {
        /// Override simulation.scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Override simulation.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the contextual / global / random A/B comparison on a scenario.
    SimulateAb {
        /// Override simulation.scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Override simulation.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve recommendations over the stdin/stdout line protocol.
    Serve,
    /// Generate publishing insights for one day.
    Insights {
        /// Day to analyze, YYYY-MM-DD.
        #[arg(long)]
        day: String,
        /// Articles listed per insight.
        #[arg(long, default_value_t = 5)]
        top_n: usize,
        /// Lookback for historically liked articles, days.
        #[arg(long, default_value_t = 7)]
        past_days: i64,
    },
    /// Export the standardized daily trend series of one topic.
    Trend {
        /// Topic index.
        #[arg(long)]
        topic: usize,
        /// First day, YYYY-MM-DD; defaults to the earliest publication day.
        #[arg(long)]
        from: Option<String>,
        /// Last day, YYYY-MM-DD; defaults to the latest publication day.
        #[arg(long)]
        to: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match commands::run(&cli.config, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
