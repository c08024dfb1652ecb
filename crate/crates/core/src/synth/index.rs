use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use crate::augment::AugmentedCorpus;
use crate::kb::{build_constraint, disjoint, normalize_text, AbstractTriple, ConceptEntry, ConstraintSet, KeywordExtractor, Relation, Triple, TripleId};

/// Which parts of a head's constraint take part in distractor filtering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Keywords and concepts.
    #[default]
    Concepts,
    /// Keywords only.
    KeywordOnly,
}

#[derive(Debug, Clone)]
struct Entry {
    id: TripleId,
    relation: Relation,
    tail_key: String,
}

/// Inverted index over the original triples' constraint sets.
///
/// Triples are addressed internally by their position in the corpus; all
/// posting lists and relation buckets are sorted by position, which is
/// also id order for ingested corpora.
#[derive(Debug, Clone, Default)]
pub struct ConstraintIndex {
    entries: Vec<Entry>,
    positions: HashMap<TripleId, u32>,
    postings: HashMap<String, Vec<u32>>,
    buckets: [Vec<u32>; 9],
    constraints: Vec<ConstraintSet>,
    mode: ConstraintMode,
}

/// A request for distractors: the question's relation, constraint and gold
/// tail, plus the original triple it came from (excluded from results).
#[derive(Debug, Clone)]
pub struct DistractorQuery<'a> {
    pub source: Option<TripleId>,
    pub relation: Relation,
    pub constraint: Cow<'a, ConstraintSet>,
    pub gold_tail: Cow<'a, str>,
}

impl ConstraintIndex {
    /// Index the original triples of `corpus`.
    ///
    /// A head's concepts are the plausible entries in `concepts` plus the
    /// concept entries carried by that head's retained abstractions.
    pub fn build(
        corpus: &AugmentedCorpus,
        concepts: &[ConceptEntry],
        extractor: &KeywordExtractor,
        mode: ConstraintMode,
    ) -> ConstraintIndex {
        let mut by_head: HashMap<&str, Vec<&ConceptEntry>> = HashMap::new();
        if mode == ConstraintMode::Concepts {
            let all = concepts.iter().chain(corpus.abstractions().iter().map(|a| &a.concept_entry));
            for c in all {
                by_head.entry(c.head.as_str()).or_default().push(c);
            }
        }

        // Triples sharing a head share a constraint set.
        let mut head_cache: HashMap<&str, ConstraintSet> = HashMap::new();
        let originals = corpus.originals();
        let mut index = ConstraintIndex { mode, ..Default::default() };
        index.entries.reserve(originals.len());
        index.constraints.reserve(originals.len());

        for (pos, t) in originals.iter().enumerate() {
            let pos = pos as u32;
            let cs = head_cache
                .entry(t.head.as_str())
                .or_insert_with(|| {
                    let entries = by_head.get(t.head.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                    build_constraint(extractor, t, entries.iter().copied()).expect("entries grouped by head")
                })
                .clone();
            let mut seen = HashSet::new();
            for token in cs.members() {
                if seen.insert(token) {
                    index.postings.entry(token.to_string()).or_default().push(pos);
                }
            }
            index.buckets[t.relation.index()].push(pos);
            index.positions.insert(t.id, pos);
            index.entries.push(Entry { id: t.id, relation: t.relation, tail_key: normalize_text(&t.tail) });
            index.constraints.push(cs);
        }
        index
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Triple ids whose constraint contains `token`, ascending.
    pub fn postings(&self, token: &str) -> Vec<TripleId> {
        self.postings
            .get(token)
            .map(|ps| ps.iter().map(|&p| self.entries[p as usize].id).collect())
            .unwrap_or_default()
    }

    pub fn posting_keys(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Triple ids with `relation`, in corpus order.
    pub fn bucket(&self, relation: Relation) -> Vec<TripleId> {
        self.buckets[relation.index()].iter().map(|&p| self.entries[p as usize].id).collect()
    }

    pub fn constraint(&self, id: TripleId) -> Option<&ConstraintSet> {
        self.positions.get(&id).map(|&p| &self.constraints[p as usize])
    }

    /// Query for the QA pair of an original triple.
    pub fn query_for_original<'a>(&'a self, triple: &'a Triple) -> DistractorQuery<'a> {
        let constraint = match self.constraint(triple.id) {
            Some(cs) => Cow::Borrowed(cs),
            None => Cow::Owned(ConstraintSet::default()),
        };
        DistractorQuery {
            source: Some(triple.id),
            relation: triple.relation,
            constraint,
            gold_tail: Cow::Borrowed(&triple.tail),
        }
    }

    /// Query for an abstract triple: its source's constraint plus its own
    /// concept (keyword mode uses the source keywords alone).
    pub fn query_for_abstract<'a>(
        &'a self,
        abstraction: &'a AbstractTriple,
        extractor: &KeywordExtractor,
    ) -> DistractorQuery<'a> {
        let base = self.constraint(abstraction.source_triple_id).cloned().unwrap_or_default();
        let constraint = match (self.mode, extractor.normalize_concept(&abstraction.concept_entry.concept)) {
            (ConstraintMode::Concepts, Some(c)) => base.with_concept(c),
            _ => base,
        };
        DistractorQuery {
            source: Some(abstraction.source_triple_id),
            relation: abstraction.relation,
            constraint: Cow::Owned(constraint),
            gold_tail: Cow::Borrowed(&abstraction.tail),
        }
    }

    /// Exact eligibility test for a single candidate position.
    pub(crate) fn admits(&self, pos: u32, query: &DistractorQuery<'_>, gold_key: &str) -> bool {
        let e = &self.entries[pos as usize];
        e.relation == query.relation
            && Some(e.id) != query.source
            && e.tail_key != gold_key
            && disjoint(&self.constraints[pos as usize], &query.constraint)
    }

    pub(crate) fn bucket_positions(&self, relation: Relation) -> &[u32] {
        &self.buckets[relation.index()]
    }

    pub(crate) fn id_at(&self, pos: u32) -> TripleId {
        self.entries[pos as usize].id
    }

    /// Every eligible distractor for `query`, ascending by position: the
    /// relation bucket minus the union of the posting lists of the query's
    /// constraint members, the source itself, and same-tail candidates.
    pub fn eligible_distractors(&self, query: &DistractorQuery<'_>) -> Vec<TripleId> {
        self.eligible_positions(query).into_iter().map(|p| self.id_at(p)).collect()
    }

    pub(crate) fn eligible_positions(&self, query: &DistractorQuery<'_>) -> Vec<u32> {
        let mut blocked: Vec<u32> = query
            .constraint
            .members()
            .filter_map(|t| self.postings.get(t))
            .flatten()
            .copied()
            .collect();
        blocked.sort_unstable();
        blocked.dedup();
        let source = query.source.and_then(|id| self.positions.get(&id).copied());
        let gold_key = normalize_text(&query.gold_tail);
        self.buckets[query.relation.index()]
            .iter()
            .copied()
            .filter(|p| blocked.binary_search(p).is_err())
            .filter(|&p| Some(p) != source)
            .filter(|&p| self.entries[p as usize].tail_key != gold_key)
            .collect()
    }
}
