mod kb;
mod scoring;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use concept_forge::ingest::{load_corpus, Corpus, IngestConfig, LoadReport, Threshold, DEFAULT_THRESHOLD};
use concept_forge::templates::TemplateSet;
use serde::Serialize;

use crate::Outcome;

pub use kb::{augment, ingest, stats, synth};
pub use scoring::{dynamics, eval, mock_scorer, score};

/// Knowledge-base inputs shared by several subcommands.
#[derive(Args, Debug, Clone, Serialize)]
pub struct KbArgs {
    /// Triples, JSONL (`head`, `relation`, `tail`) or `.tsv`.
    #[arg(long)]
    pub kb: PathBuf,
    /// Concept entries, JSONL.
    #[arg(long)]
    pub concepts: Option<PathBuf>,
    /// Abstract triples, JSONL.
    #[arg(long = "abstract")]
    pub abstracts: Option<PathBuf>,
    /// Minimum plausibility kept (inclusive).
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

impl KbArgs {
    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        std::iter::once(&self.kb).chain(self.concepts.iter()).chain(self.abstracts.iter())
    }
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    /// Directory for the normalized files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write the statistics as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output QA pairs, JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Use original triples only.
    #[arg(long)]
    pub no_augment: bool,
    /// Filter distractors on keyword overlap only.
    #[arg(long)]
    pub keyword_only: bool,
    /// Stem keywords (English Snowball) before comparing.
    #[arg(long)]
    pub stemming: bool,
    /// Template file overriding the shipped templates.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    /// QA pairs, JSONL.
    #[arg(long)]
    pub qa: PathBuf,
    /// `mock`, an http(s) base URL, or a command line (default: $SCORER_URL).
    #[arg(long)]
    pub scorer: Option<String>,
    /// Knowledge base the QA pairs were built from; enables the statement
    /// form `head, connective, option.` instead of `question option`.
    #[arg(long)]
    pub kb: Option<PathBuf>,
    #[arg(long = "abstract", requires = "kb")]
    pub abstracts: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint index recorded with every score line.
    #[arg(long)]
    pub checkpoint: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = LossSignArg::PredictionConsistent)]
    pub loss_sign: LossSignArg,
    #[arg(long, default_value_t = concept_forge::bridge::DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSignArg {
    AsPrinted,
    PredictionConsistent,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// anli, csqa, piqa, siqa or wg.
    #[arg(long)]
    pub bench: String,
    /// Validation split in the benchmark's native JSONL layout.
    #[arg(long)]
    pub data: PathBuf,
    /// Separate label file (aNLI, PIQA, SIQA).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-item similarity sidecar, JSONL `{"id", "similarity"}`.
    #[arg(long)]
    pub similarity: Option<PathBuf>,
    /// Quantile separating difficult from easy items.
    #[arg(long, default_value_t = 0.5)]
    pub quantile: f64,
    /// Results of another run, for a per-split accuracy comparison.
    #[arg(long, requires = "similarity")]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = concept_forge::bridge::DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DynamicsArgs {
    /// Score logs, one per checkpoint, in checkpoint order.
    #[arg(long, num_args = 1.., required_unless_present = "diff", conflicts_with = "diff")]
    pub scores: Vec<PathBuf>,
    /// QA pairs supplying gold indices missing from the score logs.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    /// Compare two dynamics tables (second minus first).
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub diff: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub conf_hi: f64,
    #[arg(long, default_value_t = 0.3)]
    pub conf_lo: f64,
    #[arg(long, default_value_t = 0.25)]
    pub var_hi: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct MockScorerArgs {
    /// Exit after this many replies.
    #[arg(long)]
    pub limit: Option<usize>,
}

fn load_kb(args: &KbArgs, outcome: &mut Outcome) -> Result<Corpus> {
    let mut cfg = IngestConfig::new(&args.kb);
    cfg.concepts = args.concepts.clone();
    cfg.abstracts = args.abstracts.clone();
    cfg.plausibility_threshold = Threshold::new(args.threshold)?;
    cfg.strict = false;
    let corpus = load_corpus(&cfg)?;
    let reports: [(&Path, &LoadReport); 3] = [
        (&args.kb, &corpus.triple_report),
        (args.concepts.as_deref().unwrap_or(Path::new("")), &corpus.concept_report),
        (args.abstracts.as_deref().unwrap_or(Path::new("")), &corpus.abstract_report),
    ];
    for (path, report) in reports {
        for issue in &report.skipped {
            outcome.warn(format!("{}:{}: skipped: {}", path.display(), issue.line, issue.message));
        }
    }
    Ok(corpus)
}

fn load_templates(path: Option<&Path>) -> Result<TemplateSet> {
    match path {
        Some(p) => TemplateSet::from_file(p).with_context(|| format!("loading templates {}", p.display())),
        None => Ok(TemplateSet::default()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}
