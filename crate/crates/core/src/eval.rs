//! Zero-shot multiple-choice evaluation.
//!
//! Field mappings of the per-benchmark adapters (validation-split files):
//!
//! | benchmark | data file fields | context | question | choices | gold |
//! |---|---|---|---|---|---|
//! | aNLI | `story_id obs1 obs2 hyp1 hyp2` | `obs1` | `obs2` | `hyp1 hyp2` | label file `1`/`2` or inline `label` |
//! | CSQA | `id question.stem question.choices[].{label,text} answerKey` | none | `stem` | `text` in order | position of `answerKey` |
//! | PIQA | `id? goal sol1 sol2` | none | `goal` | `sol1 sol2` | label file `0`/`1` or inline `label` |
//! | SIQA | `context question answerA answerB answerC` | `context` | `question` | answers A–C | label file `1`–`3` or inline `label` |
//! | WG | `qID sentence option1 option2 answer` | none | `sentence` | options | `answer` `1`/`2` |
//!
//! Items without an id field get `<bench>-<line>` (0-based line).

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bridge::{BridgeError, Scorer};
use crate::scoring::{concat_for_scoring, mlm_score, predict, Prompt, SequenceScore};
use crate::templates::{TemplateError, TemplateSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{labels} labels for {items} items")]
    LabelCount { labels: usize, items: usize },
    #[error("unknown benchmark `{0}` (expected anli, csqa, piqa, siqa or wg)")]
    UnknownBenchmark(String),
    #[error("item {0} has no similarity score")]
    MissingSimilarity(String),
    #[error("item {id}: {source}")]
    Template {
        id: String,
        #[source]
        source: TemplateError,
    },
    #[error("item {id}: {source}")]
    Scorer {
        id: String,
        #[source]
        source: BridgeError,
    },
    #[error("quantile must lie in [0, 1], got {0}")]
    Quantile(f64),
    #[error("results files cover different items")]
    ResultMismatch,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Anli,
    Csqa,
    Piqa,
    Siqa,
    Wg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub name: &'static str,
    pub expected_items: usize,
    pub choices_per_item: usize,
    /// Key into the benchmark section of the template set.
    pub template: &'static str,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [Benchmark::Anli, Benchmark::Csqa, Benchmark::Piqa, Benchmark::Siqa, Benchmark::Wg];

    pub fn spec(self) -> BenchmarkSpec {
        let (name, expected_items, choices_per_item, template) = match self {
            Benchmark::Anli => ("aNLI", 1532, 2, "anli"),
            Benchmark::Csqa => ("CSQA", 1221, 5, "csqa"),
            Benchmark::Piqa => ("PIQA", 1838, 2, "piqa"),
            Benchmark::Siqa => ("SIQA", 1954, 3, "siqa"),
            Benchmark::Wg => ("WG", 1267, 2, "wg"),
        };
        BenchmarkSpec { name, expected_items, choices_per_item, template }
    }

    fn key(self) -> &'static str {
        self.spec().template
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.spec().name)
    }
}

impl FromStr for Benchmark {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.key().eq_ignore_ascii_case(s) || b.spec().name.eq_ignore_ascii_case(s))
            .ok_or_else(|| EvalError::UnknownBenchmark(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub question: String,
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedBenchmark {
    pub benchmark: Benchmark,
    pub items: Vec<EvalItem>,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io { path: path.display().to_string(), source }
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, Value)>, EvalError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i, v));
    }
    Ok(out)
}

fn read_labels(path: &Path) -> Result<Vec<String>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

struct Row<'a> {
    path: &'a Path,
    line: usize,
    value: &'a Value,
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> EvalError {
        EvalError::Parse { path: self.path.display().to_string(), line: self.line + 1, message: message.into() }
    }

    fn text(&self, field: &str) -> Result<String, EvalError> {
        self.value.get(field).and_then(Value::as_str).map(str::to_string).ok_or_else(|| self.err(format!("missing string field `{field}`")))
    }

    fn id(&self, field: &str, bench: Benchmark) -> String {
        match self.value.get(field) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => format!("{}-{}", bench.key(), self.line),
        }
    }

    fn label(&self, field: &str) -> Option<String> {
        match self.value.get(field) {
            Some(Value::String(s)) => Some(s.trim().to_string()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        }
    }
}

/// Parse a label with the given index base (`1` → 0 under base 1).
fn parse_label(label: &str, base: usize, arity: usize) -> Option<usize> {
    label.parse::<usize>().ok().and_then(|v| v.checked_sub(base)).filter(|&g| g < arity)
}

/// Load a benchmark's validation split. `labels` is the separate label file
/// used by aNLI, PIQA and SIQA; inline labels are used when it is absent.
/// Count and arity mismatches against the benchmark's published shape are
/// reported as warnings.
pub fn load_benchmark(bench: Benchmark, data: &Path, labels: Option<&Path>) -> Result<LoadedBenchmark, EvalError> {
    let rows = read_jsonl(data)?;
    let labels = labels.map(read_labels).transpose()?;
    if let Some(l) = &labels {
        if l.len() != rows.len() {
            return Err(EvalError::LabelCount { labels: l.len(), items: rows.len() });
        }
    }
    let mut warnings = Vec::new();
    let mut items = Vec::with_capacity(rows.len());
    for (k, (line, value)) in rows.iter().enumerate() {
        let row = Row { path: data, line: *line, value };
        let external = labels.as_ref().map(|l| l[k].clone());
        let item = match bench {
            Benchmark::Anli => {
                let choices = vec![row.text("hyp1")?, row.text("hyp2")?];
                let gold = external.or_else(|| row.label("label")).and_then(|l| parse_label(&l, 1, 2));
                EvalItem {
                    id: row.id("story_id", bench),
                    context: Some(row.text("obs1")?),
                    question: row.text("obs2")?,
                    choices,
                    gold,
                    similarity: None,
                }
            }
            Benchmark::Csqa => {
                let q = value.get("question").ok_or_else(|| row.err("missing `question`"))?;
                let stem = q.get("stem").and_then(Value::as_str).ok_or_else(|| row.err("missing `question.stem`"))?;
                let raw = q.get("choices").and_then(Value::as_array).ok_or_else(|| row.err("missing `question.choices`"))?;
                let mut letters = Vec::new();
                let mut choices = Vec::new();
                for c in raw {
                    let text = c.get("text").and_then(Value::as_str).ok_or_else(|| row.err("choice without `text`"))?;
                    letters.push(c.get("label").and_then(Value::as_str).unwrap_or_default().to_string());
                    choices.push(text.to_string());
                }
                let gold = row.label("answerKey").and_then(|k| letters.iter().position(|l| *l == k));
                EvalItem { id: row.id("id", bench), context: None, question: stem.to_string(), choices, gold, similarity: None }
            }
            Benchmark::Piqa => {
                let gold = external.or_else(|| row.label("label")).and_then(|l| parse_label(&l, 0, 2));
                EvalItem {
                    id: row.id("id", bench),
                    context: None,
                    question: row.text("goal")?,
                    choices: vec![row.text("sol1")?, row.text("sol2")?],
                    gold,
                    similarity: None,
                }
            }
            Benchmark::Siqa => {
                let gold = external.or_else(|| row.label("label")).and_then(|l| parse_label(&l, 1, 3));
                EvalItem {
                    id: row.id("id", bench),
                    context: Some(row.text("context")?),
                    question: row.text("question")?,
                    choices: vec![row.text("answerA")?, row.text("answerB")?, row.text("answerC")?],
                    gold,
                    similarity: None,
                }
            }
            Benchmark::Wg => {
                let gold = row.label("answer").and_then(|l| parse_label(&l, 1, 2));
                EvalItem {
                    id: row.id("qID", bench),
                    context: None,
                    question: row.text("sentence")?,
                    choices: vec![row.text("option1")?, row.text("option2")?],
                    gold,
                    similarity: None,
                }
            }
        };
        items.push(item);
    }
    warnings.extend(shape_warnings(bench, &items));
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LoadedBenchmark { benchmark: bench, items, warnings })
}

/// Differences between `items` and the benchmark's published shape.
pub fn shape_warnings(bench: Benchmark, items: &[EvalItem]) -> Vec<String> {
    let spec = bench.spec();
    let mut out = Vec::new();
    if items.len() != spec.expected_items {
        out.push(format!("{}: expected {} items, found {}", spec.name, spec.expected_items, items.len()));
    }
    let bad_arity = items.iter().filter(|i| i.choices.len() != spec.choices_per_item).count();
    if bad_arity > 0 {
        out.push(format!("{}: {bad_arity} item(s) do not have {} choices", spec.name, spec.choices_per_item));
    }
    let unlabeled = items.iter().filter(|i| i.gold.is_none()).count();
    if unlabeled > 0 {
        out.push(format!("{}: {unlabeled} item(s) have no usable gold label", spec.name));
    }
    out
}

#[derive(Debug, Deserialize)]
struct SimilarityLine {
    id: Value,
    similarity: f64,
}

/// Read a `{"id", "similarity"}` JSONL sidecar.
pub fn read_similarity(path: &Path) -> Result<HashMap<String, f64>, EvalError> {
    let mut out = HashMap::new();
    for (line, value) in read_jsonl(path)? {
        let s: SimilarityLine = serde_json::from_value(value).map_err(|e| EvalError::Parse {
            path: path.display().to_string(),
            line: line + 1,
            message: e.to_string(),
        })?;
        let id = match s.id {
            Value::String(s) => s,
            other => other.to_string(),
        };
        out.insert(id, s.similarity);
    }
    Ok(out)
}

/// Set each item's similarity from `scores`; returns how many items had
/// no entry.
pub fn attach_similarity(items: &mut [EvalItem], scores: &HashMap<String, f64>) -> usize {
    let mut missing = 0;
    for item in items {
        item.similarity = scores.get(&item.id).copied();
        missing += item.similarity.is_none() as usize;
    }
    missing
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub id: String,
    pub scores: Vec<f64>,
    pub pred: usize,
    pub gold: Option<usize>,
}

impl ItemResult {
    pub fn correct(&self) -> bool {
        self.gold == Some(self.pred)
    }
}

#[derive(Debug)]
pub struct EvalReport {
    /// Per-item results in item order. On failure, the items scored before
    /// the run was aborted.
    pub results: Vec<ItemResult>,
    pub error: Option<EvalError>,
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        accuracy(&self.results)
    }
}

/// Fraction of labelled results whose prediction equals gold.
pub fn accuracy(results: &[ItemResult]) -> Option<f64> {
    let labelled = results.iter().filter(|r| r.gold.is_some()).count();
    (labelled > 0).then(|| results.iter().filter(|r| r.correct()).count() as f64 / labelled as f64)
}

/// Prompt text for choice `k` of `item`.
pub fn item_prompt(item: &EvalItem, k: usize, bench: Benchmark, templates: &TemplateSet) -> Result<String, TemplateError> {
    concat_for_scoring(
        item.context.as_deref(),
        Prompt::Text { benchmark: bench.key(), question: &item.question },
        &item.choices[k],
        templates,
    )
}

fn evaluate_item(item: &EvalItem, scorer: &dyn Scorer, templates: &TemplateSet, bench: Benchmark) -> Result<ItemResult, EvalError> {
    let mut scores = Vec::with_capacity(item.choices.len());
    for k in 0..item.choices.len() {
        let text = item_prompt(item, k, bench, templates)
            .map_err(|source| EvalError::Template { id: item.id.clone(), source })?;
        let tlp = scorer.score(&text).map_err(|source| EvalError::Scorer { id: item.id.clone(), source })?;
        scores.push(mlm_score(&tlp));
    }
    let pred = predict(&scores).map_err(|_| EvalError::Parse {
        path: String::new(),
        line: 0,
        message: format!("item {} has no choices", item.id),
    })?;
    Ok(ItemResult { id: item.id.clone(), scores: scores.iter().map(|s: &SequenceScore| s.value()).collect(), pred, gold: item.gold })
}

/// Score every choice of every item and predict by lowest score. Items run
/// in parallel on the current rayon pool, which bounds the number of
/// in-flight scorer requests. The first failure stops new items from
/// starting; completed items are still returned.
pub fn evaluate(items: &[EvalItem], scorer: &dyn Scorer, templates: &TemplateSet, bench: Benchmark) -> EvalReport {
    let failed = AtomicBool::new(false);
    let outcomes: Vec<Option<Result<ItemResult, EvalError>>> = items
        .par_iter()
        .map(|item| {
            if failed.load(Ordering::Relaxed) {
                return None;
            }
            let r = evaluate_item(item, scorer, templates, bench);
            if r.is_err() {
                failed.store(true, Ordering::Relaxed);
            }
            Some(r)
        })
        .collect();
    let mut results = Vec::with_capacity(items.len());
    let mut error = None;
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                error.get_or_insert(e);
            }
        }
    }
    EvalReport { results, error }
}

pub fn write_results<W: Write>(mut w: W, results: &[ItemResult]) -> std::io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_results(path: &Path) -> Result<Vec<ItemResult>, EvalError> {
    read_jsonl(path)?
        .into_iter()
        .map(|(line, v)| {
            serde_json::from_value(v).map_err(|e| EvalError::Parse {
                path: path.display().to_string(),
                line: line + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Linear-interpolation quantile of `values` (`q = 0.5` is the median).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySplit {
    pub threshold: f64,
    /// Ids at or above the threshold.
    pub easy: Vec<String>,
    /// Ids below the threshold.
    pub difficult: Vec<String>,
}

/// Split items at the `q`-quantile of their similarity scores.
pub fn split_by_similarity(items: &[EvalItem], q: f64) -> Result<SimilaritySplit, EvalError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(EvalError::Quantile(q));
    }
    let mut sims = Vec::with_capacity(items.len());
    for item in items {
        sims.push(item.similarity.ok_or_else(|| EvalError::MissingSimilarity(item.id.clone()))?);
    }
    let threshold = quantile(&sims, q).unwrap_or(0.0);
    let (easy, difficult): (Vec<_>, Vec<_>) = items.iter().zip(&sims).partition(|(_, &s)| s >= threshold);
    Ok(SimilaritySplit {
        threshold,
        easy: easy.into_iter().map(|(i, _)| i.id.clone()).collect(),
        difficult: difficult.into_iter().map(|(i, _)| i.id.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAccuracy {
    pub split: &'static str,
    pub items: usize,
    pub accuracy: Option<f64>,
}

/// Accuracy of `results` restricted to each side of `split`.
pub fn split_accuracy(results: &[ItemResult], split: &SimilaritySplit) -> [SplitAccuracy; 2] {
    let by_id: HashMap<&str, &ItemResult> = results.iter().map(|r| (r.id.as_str(), r)).collect();
    let side = |name: &'static str, ids: &[String]| {
        let rs: Vec<ItemResult> = ids.iter().filter_map(|id| by_id.get(id.as_str()).map(|r| (*r).clone())).collect();
        SplitAccuracy { split: name, items: rs.len(), accuracy: accuracy(&rs) }
    };
    [side("easy", &split.easy), side("difficult", &split.difficult)]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitDelta {
    pub split: &'static str,
    pub items: usize,
    pub accuracy_a: Option<f64>,
    pub accuracy_b: Option<f64>,
    pub delta: Option<f64>,
}

/// Per-split accuracy of two runs over the same items, and `b − a`.
pub fn split_deltas(a: &[ItemResult], b: &[ItemResult], split: &SimilaritySplit) -> Result<Vec<SplitDelta>, EvalError> {
    let mut ia: Vec<&str> = a.iter().map(|r| r.id.as_str()).collect();
    let mut ib: Vec<&str> = b.iter().map(|r| r.id.as_str()).collect();
    ia.sort_unstable();
    ib.sort_unstable();
    if ia != ib {
        return Err(EvalError::ResultMismatch);
    }
    let sa = split_accuracy(a, split);
    let sb = split_accuracy(b, split);
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| SplitDelta {
            split: x.split,
            items: x.items,
            accuracy_a: x.accuracy,
            accuracy_b: y.accuracy,
            delta: x.accuracy.zip(y.accuracy).map(|(p, q)| q - p),
        })
        .collect())
}

pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
