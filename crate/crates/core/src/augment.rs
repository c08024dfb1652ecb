//! One-step conceptualization expansion of the KB: originals plus their
//! plausible abstract siblings, indexed by source triple.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::kb::{normalize_text, AbstractId, AbstractTriple, KbError, Label, Relation, Triple, TripleId};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("abstract triple {abstract_id} references missing source {source_id}")]
    DanglingSource { abstract_id: AbstractId, source_id: TripleId },
    #[error("abstract triple {abstract_id} is inconsistent with its source: {source}")]
    Inconsistent {
        abstract_id: AbstractId,
        #[source]
        source: KbError,
    },
}

/// Original triples together with their retained abstractions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AugmentedCorpus {
    originals: Vec<Triple>,
    abstractions: Vec<AbstractTriple>,
    positions: HashMap<TripleId, usize>,
    index: BTreeMap<TripleId, Vec<usize>>,
    dropped_identity: usize,
    dropped_duplicates: usize,
}

impl AugmentedCorpus {
    pub fn originals(&self) -> &[Triple] {
        &self.originals
    }

    pub fn abstractions(&self) -> &[AbstractTriple] {
        &self.abstractions
    }

    pub fn original(&self, id: TripleId) -> Option<&Triple> {
        self.positions.get(&id).map(|&p| &self.originals[p])
    }

    /// Abstractions derived from `id`, in input order.
    pub fn siblings(&self, id: TripleId) -> impl Iterator<Item = &AbstractTriple> {
        self.index.get(&id).into_iter().flatten().map(move |&i| &self.abstractions[i])
    }

    /// Number of index entries across all sources.
    pub fn index_len(&self) -> usize {
        self.index.values().map(Vec::len).sum()
    }

    pub fn dropped_identity(&self) -> usize {
        self.dropped_identity
    }

    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    /// The same originals with no abstractions.
    pub fn originals_only(&self) -> AugmentedCorpus {
        AugmentedCorpus {
            originals: self.originals.clone(),
            positions: self.positions.clone(),
            ..Default::default()
        }
    }
}

/// Attach `abstracts` to `originals`.
///
/// Abstractions textually identical to their source are dropped, as are
/// later duplicates of an already-seen normalized `(head_c, relation, tail)`.
/// Survivors keep their input order.
pub fn augment(originals: Vec<Triple>, abstracts: Vec<AbstractTriple>) -> Result<AugmentedCorpus, AugmentError> {
    let positions: HashMap<TripleId, usize> = originals.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let mut seen = HashSet::new();
    let mut abstractions = Vec::new();
    let mut index: BTreeMap<TripleId, Vec<usize>> = BTreeMap::new();
    let (mut dropped_identity, mut dropped_duplicates) = (0, 0);

    for a in abstracts {
        let source = positions
            .get(&a.source_triple_id)
            .map(|&p| &originals[p])
            .ok_or(AugmentError::DanglingSource { abstract_id: a.id, source_id: a.source_triple_id })?;
        a.verify_against(source)
            .map_err(|source| AugmentError::Inconsistent { abstract_id: a.id, source })?;
        let head_c = normalize_text(&a.head_c);
        if head_c == normalize_text(&source.head) {
            dropped_identity += 1;
            continue;
        }
        if !seen.insert((head_c, a.relation, normalize_text(&a.tail))) {
            dropped_duplicates += 1;
            continue;
        }
        index.entry(a.source_triple_id).or_default().push(abstractions.len());
        abstractions.push(a);
    }

    Ok(AugmentedCorpus { originals, abstractions, positions, index, dropped_identity, dropped_duplicates })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub relation: String,
    pub originals: usize,
    pub abstractions: usize,
    pub ratio: f64,
}

/// Per-relation `|abstractions| / |originals|`, with a final `total` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionReport {
    pub fn total(&self) -> &ExpansionRow {
        self.rows.last().expect("report always has a total row")
    }

    pub fn row(&self, relation: Relation) -> &ExpansionRow {
        &self.rows[relation.index()]
    }
}

fn row(name: &str, originals: usize, abstractions: usize) -> ExpansionRow {
    let ratio = if originals == 0 { 0.0 } else { abstractions as f64 / originals as f64 };
    ExpansionRow { relation: name.to_string(), originals, abstractions, ratio }
}

pub fn expansion_report(corpus: &AugmentedCorpus) -> ExpansionReport {
    let mut originals = [0usize; 9];
    let mut abstractions = [0usize; 9];
    for t in corpus.originals() {
        originals[t.relation.index()] += 1;
    }
    for a in corpus.abstractions() {
        abstractions[a.relation.index()] += 1;
    }
    let mut rows: Vec<ExpansionRow> = Relation::ALL
        .iter()
        .map(|r| row(r.as_str(), originals[r.index()], abstractions[r.index()]))
        .collect();
    rows.push(row("total", corpus.originals().len(), corpus.abstractions().len()));
    ExpansionReport { rows }
}

impl fmt::Display for ExpansionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>10} {:>12} {:>8}", "relation", "originals", "abstractions", "ratio")?;
        for r in &self.rows {
            writeln!(f, "{:<10} {:>10} {:>12} {:>8.2}", r.relation, r.originals, r.abstractions, r.ratio)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct OriginalOut<'a> {
    head: &'a str,
    relation: Relation,
    tail: &'a str,
    origin: &'static str,
}

#[derive(Serialize)]
struct AbstractOut<'a> {
    source_head: &'a str,
    relation: Relation,
    tail: &'a str,
    start: usize,
    end: usize,
    concept: &'a str,
    plausibility: f64,
    head_c: &'a str,
    instance: &'a str,
    label: Label,
    origin: &'static str,
}

/// Write originals then abstractions as JSONL, each tagged with `origin`.
pub fn write_augmented<W: Write>(mut w: W, corpus: &AugmentedCorpus) -> io::Result<()> {
    for t in corpus.originals() {
        let rec = OriginalOut { head: &t.head, relation: t.relation, tail: &t.tail, origin: "original" };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    for a in corpus.abstractions() {
        let source = corpus.original(a.source_triple_id).expect("index invariant");
        let rec = AbstractOut {
            source_head: &source.head,
            relation: a.relation,
            tail: &a.tail,
            start: a.concept_entry.span.start,
            end: a.concept_entry.span.end,
            concept: &a.concept_entry.concept,
            plausibility: a.plausibility.value(),
            head_c: &a.head_c,
            instance: &a.concept_entry.instance_text,
            label: a.label,
            origin: "abstract",
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
