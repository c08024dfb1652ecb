mod commands;
mod manifest;
mod scorer;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AugmentArgs, DynamicsArgs, EvalArgs, IngestArgs, MockScorerArgs, ScoreArgs, StatsArgs, SynthArgs};

#[derive(Parser)]
#[command(name = "concept-forge", version, about = "Concept-constrained commonsense QA synthesis, scoring and evaluation")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 1 when any validation warning is raised.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize knowledge-base files.
    Ingest(IngestArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Merge plausible abstract triples into the knowledge base.
    Augment(AugmentArgs),
    /// Synthesize multiple-choice QA pairs.
    Synth(SynthArgs),
    /// Score QA pairs with a masked-LM scorer.
    Score(ScoreArgs),
    /// Zero-shot evaluation on a benchmark validation split.
    Eval(EvalArgs),
    /// Confidence/variability over checkpoints, or the shift between two runs.
    Dynamics(DynamicsArgs),
    /// Serve the deterministic mock scorer over stdin/stdout.
    #[command(hide = true)]
    MockScorer(MockScorerArgs),
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Stats(a) => commands::stats(a),
        Command::Augment(a) => commands::augment(a),
        Command::Synth(a) => commands::synth(a),
        Command::Score(a) => commands::score(a),
        Command::Eval(a) => commands::eval(a),
        Command::Dynamics(a) => commands::dynamics(a),
        Command::MockScorer(a) => commands::mock_scorer(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let strict = cli.strict;
    match run(cli) {
        Ok(outcome) if strict && !outcome.warnings.is_empty() => {
            eprintln!("{} warning(s) under --strict", outcome.warnings.len());
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
