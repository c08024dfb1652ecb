//! Loading and validating triples, conceptualizations and abstract triples.
//!
//! All inputs are UTF-8 JSONL, one record per line. Blank lines are ignored.
//! Triple ids are assigned in file order, so identical input bytes always
//! produce identical ids. Concept and abstract records join onto the loaded
//! triples by exact head text (plus relation and tail for abstract rows).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{
    normalize_text, AbstractId, AbstractTriple, ConceptEntry, InstanceSpan, KbError, Label,
    Relation, Triple, TripleId,
};

/// Default plausibility cut-off for pseudo-labeled rows.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: KbError,
    },
    #[error("line {line}: head `{head}` is not present in the loaded KB")]
    DanglingHead { line: usize, head: String },
    #[error("line {line}: source triple ({head}, {relation}, {tail}) is not present in the loaded KB")]
    DanglingSource { line: usize, head: String, relation: Relation, tail: String },
    #[error("plausibility threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
}

impl IngestError {
    fn line(&self) -> Option<usize> {
        match self {
            IngestError::Parse { line, .. }
            | IngestError::Invalid { line, .. }
            | IngestError::DanglingHead { line, .. }
            | IngestError::DanglingSource { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Inclusive plausibility cut-off in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Self, IngestError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Threshold(value))
        } else {
            Err(IngestError::InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn keeps(self, plausibility: f64) -> bool {
        plausibility >= self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(DEFAULT_THRESHOLD)
    }
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub plausibility_threshold: Threshold,
    pub triples: PathBuf,
    pub concepts: Option<PathBuf>,
    pub abstracts: Option<PathBuf>,
    /// Fail on the first malformed line instead of skipping it.
    pub strict: bool,
}

impl IngestConfig {
    pub fn new(triples: impl Into<PathBuf>) -> Self {
        IngestConfig {
            plausibility_threshold: Threshold::default(),
            triples: triples.into(),
            concepts: None,
            abstracts: None,
            strict: false,
        }
    }
}

/// A line that was skipped in non-strict mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

/// Per-file accounting. For well-formed input, `retained + filtered == records`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub records: usize,
    pub retained: usize,
    pub filtered: usize,
    pub skipped: Vec<LineIssue>,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub report: LoadReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct TripleRecord {
    head: String,
    relation: String,
    tail: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConceptRecord {
    head: String,
    start: usize,
    end: usize,
    concept: String,
    plausibility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<String>,
    #[serde(default)]
    label: Label,
}

#[derive(Debug, Serialize, Deserialize)]
struct AbstractRecord {
    source_head: String,
    relation: String,
    tail: String,
    start: usize,
    end: usize,
    concept: String,
    plausibility: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head_c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<String>,
    #[serde(default)]
    label: Label,
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })
}

/// Drive `parse` over every non-blank line; in non-strict mode per-line
/// errors are recorded and skipped.
fn for_each_line<R: BufRead>(
    reader: R,
    path: &Path,
    strict: bool,
    report: &mut LoadReport,
    mut parse: impl FnMut(usize, &str) -> Result<(), IngestError>,
) -> Result<(), IngestError> {
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        report.records += 1;
        if let Err(e) = parse(line_no, &line) {
            if strict || e.line().is_none() {
                return Err(e);
            }
            log::warn!("{}: skipping {}", path.display(), e);
            report.skipped.push(LineIssue { line: line_no, message: e.to_string() });
        }
    }
    Ok(())
}

fn json<T: for<'de> Deserialize<'de>>(line_no: usize, line: &str) -> Result<T, IngestError> {
    serde_json::from_str(line).map_err(|e| IngestError::Parse { line: line_no, message: e.to_string() })
}

fn relation(line_no: usize, s: &str) -> Result<Relation, IngestError> {
    s.parse().map_err(|source| IngestError::Invalid { line: line_no, source })
}

fn invalid(line: usize) -> impl FnOnce(KbError) -> IngestError {
    move |source| IngestError::Invalid { line, source }
}

/// Read `triples.jsonl`: `{"head": str, "relation": str, "tail": str}`.
pub fn load_triples(path: impl AsRef<Path>, strict: bool) -> Result<Loaded<Triple>, IngestError> {
    let path = path.as_ref();
    read_triples(open(path)?, path, strict)
}

pub fn read_triples<R: BufRead>(reader: R, path: &Path, strict: bool) -> Result<Loaded<Triple>, IngestError> {
    let mut items = Vec::new();
    let mut report = LoadReport::default();
    for_each_line(reader, path, strict, &mut report, |line_no, line| {
        let rec: TripleRecord = json(line_no, line)?;
        let rel = relation(line_no, &rec.relation)?;
        let id = TripleId(items.len() as u64);
        items.push(Triple::new(id, rec.head, rel, rec.tail).map_err(invalid(line_no))?);
        Ok(())
    })?;
    report.retained = items.len();
    Ok(Loaded { items, report })
}

/// Read a raw tab-separated `head<TAB>relation<TAB>tail` file.
pub fn load_triples_tsv(path: impl AsRef<Path>, strict: bool) -> Result<Loaded<Triple>, IngestError> {
    let path = path.as_ref();
    let mut items = Vec::new();
    let mut report = LoadReport::default();
    for_each_line(open(path)?, path, strict, &mut report, |line_no, line| {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let rel = relation(line_no, fields[1].trim())?;
        let id = TripleId(items.len() as u64);
        items.push(Triple::new(id, fields[0], rel, fields[2]).map_err(invalid(line_no))?);
        Ok(())
    })?;
    report.retained = items.len();
    Ok(Loaded { items, report })
}

/// Exact-text join keys over a loaded set of triples.
#[derive(Debug, Default)]
pub struct TripleLookup {
    heads: HashSet<String>,
    by_key: HashMap<(String, Relation, String), TripleId>,
}

impl TripleLookup {
    pub fn new(triples: &[Triple]) -> Self {
        let mut lookup = TripleLookup::default();
        for t in triples {
            lookup.heads.insert(t.head.clone());
            lookup
                .by_key
                .entry((t.head.clone(), t.relation, t.tail.clone()))
                .or_insert(t.id);
        }
        lookup
    }

    pub fn has_head(&self, head: &str) -> bool {
        self.heads.contains(head)
    }

    /// First triple (in file order) with exactly this head, relation and tail.
    pub fn find(&self, head: &str, relation: Relation, tail: &str) -> Option<TripleId> {
        self.by_key.get(&(head.to_string(), relation, tail.to_string())).copied()
    }
}

/// Read `concepts.jsonl`, keeping entries with plausibility ≥ `threshold`.
pub fn load_concepts(
    path: impl AsRef<Path>,
    threshold: Threshold,
    lookup: &TripleLookup,
    strict: bool,
) -> Result<Loaded<ConceptEntry>, IngestError> {
    let path = path.as_ref();
    read_concepts(open(path)?, path, threshold, lookup, strict)
}

pub fn read_concepts<R: BufRead>(
    reader: R,
    path: &Path,
    threshold: Threshold,
    lookup: &TripleLookup,
    strict: bool,
) -> Result<Loaded<ConceptEntry>, IngestError> {
    let mut items = Vec::new();
    let mut report = LoadReport::default();
    let mut filtered = 0;
    for_each_line(reader, path, strict, &mut report, |line_no, line| {
        let rec: ConceptRecord = json(line_no, line)?;
        if !lookup.has_head(&rec.head) {
            return Err(IngestError::DanglingHead { line: line_no, head: rec.head });
        }
        let span = InstanceSpan::new(rec.start, rec.end);
        let entry = match &rec.instance {
            Some(inst) => ConceptEntry::with_instance(&rec.head, span, inst, rec.concept, rec.plausibility),
            None => ConceptEntry::new(&rec.head, span, rec.concept, rec.plausibility),
        }
        .map_err(invalid(line_no))?
        .labeled(rec.label);
        if threshold.keeps(rec.plausibility) {
            items.push(entry);
        } else {
            filtered += 1;
        }
        Ok(())
    })?;
    report.retained = items.len();
    report.filtered = filtered;
    Ok(Loaded { items, report })
}

/// Read `abstract.jsonl`, keeping rows with plausibility ≥ `threshold`.
/// Every row is checked to be its source head with exactly the given span
/// replaced by the concept.
pub fn load_abstract_triples(
    path: impl AsRef<Path>,
    threshold: Threshold,
    triples: &[Triple],
    lookup: &TripleLookup,
    strict: bool,
) -> Result<Loaded<AbstractTriple>, IngestError> {
    let path = path.as_ref();
    read_abstract_triples(open(path)?, path, threshold, triples, lookup, strict)
}

pub fn read_abstract_triples<R: BufRead>(
    reader: R,
    path: &Path,
    threshold: Threshold,
    triples: &[Triple],
    lookup: &TripleLookup,
    strict: bool,
) -> Result<Loaded<AbstractTriple>, IngestError> {
    let mut items = Vec::new();
    let mut report = LoadReport::default();
    let mut filtered = 0;
    for_each_line(reader, path, strict, &mut report, |line_no, line| {
        let rec: AbstractRecord = json(line_no, line)?;
        let rel = relation(line_no, &rec.relation)?;
        let source_id = lookup.find(&rec.source_head, rel, &rec.tail).ok_or_else(|| {
            IngestError::DanglingSource {
                line: line_no,
                head: rec.source_head.clone(),
                relation: rel,
                tail: rec.tail.clone(),
            }
        })?;
        let source = &triples[source_id.0 as usize];
        let span = InstanceSpan::new(rec.start, rec.end);
        let entry = match &rec.instance {
            Some(inst) => ConceptEntry::with_instance(&source.head, span, inst, rec.concept, rec.plausibility),
            None => ConceptEntry::new(&source.head, span, rec.concept, rec.plausibility),
        }
        .map_err(invalid(line_no))?
        .labeled(rec.label);
        let id = AbstractId(items.len() as u64);
        let abs = AbstractTriple::derive(id, source, entry, rec.plausibility)
            .map_err(invalid(line_no))?
            .labeled(rec.label);
        if let Some(given) = rec.head_c {
            if given != abs.head_c {
                return Err(IngestError::Invalid {
                    line: line_no,
                    source: KbError::ReconstructionMismatch { computed: abs.head_c, given },
                });
            }
        }
        if threshold.keeps(rec.plausibility) {
            items.push(abs);
        } else {
            filtered += 1;
        }
        Ok(())
    })?;
    report.retained = items.len();
    report.filtered = filtered;
    Ok(Loaded { items, report })
}

/// Everything loaded for one run.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub triples: Vec<Triple>,
    pub concepts: Vec<ConceptEntry>,
    pub abstracts: Vec<AbstractTriple>,
    pub triple_report: LoadReport,
    pub concept_report: LoadReport,
    pub abstract_report: LoadReport,
}

impl Corpus {
    /// Lines skipped across all inputs.
    pub fn skipped(&self) -> usize {
        self.triple_report.skipped.len() + self.concept_report.skipped.len() + self.abstract_report.skipped.len()
    }
}

/// Load the triples file (JSONL, or TSV when the extension is `.tsv`) and
/// the optional concept and abstract-triple files named by `config`.
pub fn load_corpus(config: &IngestConfig) -> Result<Corpus, IngestError> {
    let is_tsv = config.triples.extension().is_some_and(|e| e == "tsv");
    let triples = if is_tsv {
        load_triples_tsv(&config.triples, config.strict)?
    } else {
        load_triples(&config.triples, config.strict)?
    };
    let lookup = TripleLookup::new(&triples.items);
    let threshold = config.plausibility_threshold;
    let concepts = match &config.concepts {
        Some(p) => load_concepts(p, threshold, &lookup, config.strict)?,
        None => Loaded { items: Vec::new(), report: LoadReport::default() },
    };
    let abstracts = match &config.abstracts {
        Some(p) => load_abstract_triples(p, threshold, &triples.items, &lookup, config.strict)?,
        None => Loaded { items: Vec::new(), report: LoadReport::default() },
    };
    Ok(Corpus {
        triples: triples.items,
        concepts: concepts.items,
        abstracts: abstracts.items,
        triple_report: triples.report,
        concept_report: concepts.report,
        abstract_report: abstracts.report,
    })
}

pub fn write_triples<W: Write>(mut w: W, triples: &[Triple]) -> io::Result<()> {
    for t in triples {
        let rec = TripleRecord { head: t.head.clone(), relation: t.relation.to_string(), tail: t.tail.clone() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_concepts<W: Write>(mut w: W, concepts: &[ConceptEntry]) -> io::Result<()> {
    for c in concepts {
        let rec = ConceptRecord {
            head: c.head.clone(),
            start: c.span.start,
            end: c.span.end,
            concept: c.concept.clone(),
            plausibility: c.plausibility.value(),
            instance: Some(c.instance_text.clone()),
            label: c.label,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Write abstract triples; `source_head` is resolved through `triples`.
pub fn write_abstract_triples<W: Write>(
    mut w: W,
    abstracts: &[AbstractTriple],
    triples: &[Triple],
) -> io::Result<()> {
    for a in abstracts {
        let rec = AbstractRecord {
            source_head: triples[a.source_triple_id.0 as usize].head.clone(),
            relation: a.relation.to_string(),
            tail: a.tail.clone(),
            start: a.concept_entry.span.start,
            end: a.concept_entry.span.end,
            concept: a.concept_entry.concept.clone(),
            plausibility: a.plausibility.value(),
            head_c: Some(a.head_c.clone()),
            instance: Some(a.concept_entry.instance_text.clone()),
            label: a.label,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-relation counts, conceptualization coverage and abstract-split sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub triples_per_relation: BTreeMap<String, usize>,
    pub total_triples: usize,
    /// Distinct head events in the KB.
    pub unique_events: usize,
    /// Distinct head events with at least one retained concept.
    pub concept_events: usize,
    pub unique_instances: usize,
    pub unique_concepts: usize,
    /// Distinct (event, concept) pairs.
    pub event_concept_pairs: usize,
    /// Distinct (instance, concept) pairs.
    pub instance_concept_pairs: usize,
    pub abstract_annotated: usize,
    pub abstract_pseudo: usize,
    pub abstract_per_relation: BTreeMap<String, (usize, usize)>,
    pub avg_concepts_per_event: f64,
    pub avg_concepts_per_instance: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let mut triples_per_relation: BTreeMap<String, usize> =
        Relation::ALL.iter().map(|r| (r.to_string(), 0)).collect();
    let mut events = HashSet::new();
    for t in &corpus.triples {
        *triples_per_relation.get_mut(t.relation.as_str()).expect("all relations seeded") += 1;
        events.insert(t.head.as_str());
    }

    let mut concept_events = HashSet::new();
    let mut instances = HashSet::new();
    let mut concepts = HashSet::new();
    let mut event_pairs = HashSet::new();
    let mut instance_pairs = HashSet::new();
    for c in &corpus.concepts {
        let concept = normalize_text(&c.concept);
        let instance = normalize_text(&c.instance_text);
        concept_events.insert(c.head.as_str());
        instances.insert(instance.clone());
        concepts.insert(concept.clone());
        event_pairs.insert((c.head.as_str(), concept.clone()));
        instance_pairs.insert((instance, concept));
    }

    let mut abstract_per_relation: BTreeMap<String, (usize, usize)> =
        Relation::ALL.iter().map(|r| (r.to_string(), (0, 0))).collect();
    let (mut annotated, mut pseudo) = (0, 0);
    for a in &corpus.abstracts {
        let slot = abstract_per_relation.get_mut(a.relation.as_str()).expect("all relations seeded");
        match a.label {
            Label::Annotated => {
                annotated += 1;
                slot.0 += 1;
            }
            Label::Pseudo => {
                pseudo += 1;
                slot.1 += 1;
            }
        }
    }

    CorpusStats {
        triples_per_relation,
        total_triples: corpus.triples.len(),
        unique_events: events.len(),
        concept_events: concept_events.len(),
        unique_instances: instances.len(),
        unique_concepts: concepts.len(),
        event_concept_pairs: event_pairs.len(),
        instance_concept_pairs: instance_pairs.len(),
        abstract_annotated: annotated,
        abstract_pseudo: pseudo,
        abstract_per_relation,
        avg_concepts_per_event: ratio(event_pairs.len(), concept_events.len()),
        avg_concepts_per_instance: ratio(instance_pairs.len(), instances.len()),
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>10} {:>10} {:>10}", "relation", "triples", "abs.annot", "abs.pseudo")?;
        for r in Relation::ALL {
            let name = r.as_str();
            let (a, p) = self.abstract_per_relation[name];
            writeln!(f, "{:<10} {:>10} {:>10} {:>10}", name, self.triples_per_relation[name], a, p)?;
        }
        writeln!(
            f,
            "{:<10} {:>10} {:>10} {:>10}",
            "total", self.total_triples, self.abstract_annotated, self.abstract_pseudo
        )?;
        writeln!(f, "unique events            {}", self.unique_events)?;
        writeln!(f, "events with concepts     {}", self.concept_events)?;
        writeln!(f, "unique instances         {}", self.unique_instances)?;
        writeln!(f, "unique concepts          {}", self.unique_concepts)?;
        writeln!(f, "avg concepts/event       {:.2}", self.avg_concepts_per_event)?;
        write!(f, "avg concepts/instance    {:.2}", self.avg_concepts_per_instance)
    }
}
