//! Seeded generator of synthetic knowledge bases for tests and benchmarks.
//!
//! Heads look like `PersonX v12 the n345` or `PersonX v3 n77 with n1024`.
//! Every noun belongs to one or two concept classes (`c<k> thing`), so
//! unrelated heads still collide on concepts, and tails come from a small
//! pool so that tail collisions occur too.

use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ingest::{write_abstract_triples, write_concepts, write_triples, Threshold};
use crate::kb::{AbstractId, AbstractTriple, ConceptEntry, InstanceSpan, Label, Plausibility, Relation, Triple, TripleId};
use crate::seeding::{derive_rng, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub triples: usize,
    /// Average number of triples sharing a head.
    pub triples_per_event: usize,
    pub verbs: usize,
    pub nouns: usize,
    pub concept_classes: usize,
    pub tails: usize,
    /// Chance that a triple gets an abstraction.
    pub abstract_rate: f64,
    /// Chance that a concept entry or abstraction falls below 0.9.
    pub implausible_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            triples: 1000,
            triples_per_event: 4,
            verbs: 200,
            nouns: 3000,
            concept_classes: 60,
            tails: 5000,
            abstract_rate: 0.3,
            implausible_rate: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn with_triples(triples: usize, seed: u64) -> Self {
        SyntheticConfig { triples, seed, ..Default::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SyntheticCorpus {
    pub triples: Vec<Triple>,
    pub concepts: Vec<ConceptEntry>,
    pub abstracts: Vec<AbstractTriple>,
}

struct Event {
    head: String,
    /// (char start, char end) of each noun in the head.
    nouns: Vec<(usize, usize, usize)>,
}

fn plausibility(rng: &mut ChaCha8Rng, implausible_rate: f64) -> f64 {
    if rng.random_bool(implausible_rate) {
        rng.random_range(0.0..0.9)
    } else {
        rng.random_range(0.9..=1.0)
    }
}

fn concept_classes(noun: usize, classes: usize) -> Vec<usize> {
    let first = noun % classes;
    let second = (noun / classes) % classes;
    if noun.is_multiple_of(3) && second != first {
        vec![first, second]
    } else {
        vec![first]
    }
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = derive_rng(cfg.seed, Domain::Fixture, 0);
    let n_events = cfg.triples.div_ceil(cfg.triples_per_event.max(1)).max(1);
    let events: Vec<Event> = (0..n_events)
        .map(|_| {
            let verb = rng.random_range(0..cfg.verbs);
            let a = rng.random_range(0..cfg.nouns);
            let mut head = format!("PersonX v{verb} ");
            let mut nouns = Vec::new();
            if rng.random_bool(0.5) {
                head.push_str("the ");
                let start = head.len();
                head.push_str(&format!("n{a}"));
                nouns.push((start, head.len(), a));
            } else {
                let b = rng.random_range(0..cfg.nouns);
                let start = head.len();
                head.push_str(&format!("n{a}"));
                nouns.push((start, head.len(), a));
                head.push_str(" with ");
                let start = head.len();
                head.push_str(&format!("n{b}"));
                nouns.push((start, head.len(), b));
            }
            Event { head, nouns }
        })
        .collect();

    let mut out = SyntheticCorpus::default();
    let mut entries_by_event: Vec<Vec<ConceptEntry>> = Vec::with_capacity(n_events);
    for e in &events {
        let mut entries = Vec::new();
        for &(start, end, noun) in &e.nouns {
            for class in concept_classes(noun, cfg.concept_classes.max(1)) {
                let p = plausibility(&mut rng, cfg.implausible_rate);
                let label = if rng.random_bool(0.1) { Label::Annotated } else { Label::Pseudo };
                let entry = ConceptEntry::new(e.head.clone(), InstanceSpan::new(start, end), format!("c{class} thing"), p)
                    .expect("generated spans are valid")
                    .labeled(label);
                entries.push(entry);
            }
        }
        out.concepts.extend(entries.iter().cloned());
        entries_by_event.push(entries);
    }

    let mut seen = HashSet::new();
    for i in 0..cfg.triples {
        // Walk events in order first so every event is used at least once.
        let ev = if i < n_events { i } else { rng.random_range(0..n_events) };
        // Redraw until (head, relation, tail) is new, so sources resolve
        // unambiguously.
        let (relation, tail) = loop {
            let r = rng.random_range(0..Relation::ALL.len());
            let t = rng.random_range(0..cfg.tails);
            if seen.insert((ev, r, t)) {
                break (Relation::ALL[r], format!("do t{t} things"));
            }
        };
        let t = Triple::new(TripleId(i as u64), events[ev].head.clone(), relation, tail).expect("non-empty fields");
        if rng.random_bool(cfg.abstract_rate) {
            let entries = &entries_by_event[ev];
            let p = plausibility(&mut rng, cfg.implausible_rate);
            // An abstraction record carries one plausibility, shared by its
            // embedded concept entry.
            let mut entry = entries[rng.random_range(0..entries.len())].clone();
            entry.plausibility = Plausibility::new(p).expect("in range");
            let label = entry.label;
            let id = AbstractId(out.abstracts.len() as u64);
            out.abstracts.push(AbstractTriple::derive(id, &t, entry, p).expect("entry matches head").labeled(label));
        }
        out.triples.push(t);
    }
    out
}

impl SyntheticCorpus {
    /// Concept entries and abstractions at or above `threshold`, with
    /// abstraction ids renumbered the way ingestion assigns them.
    pub fn retained(&self, threshold: Threshold) -> (Vec<ConceptEntry>, Vec<AbstractTriple>) {
        let concepts = self.concepts.iter().filter(|c| threshold.keeps(c.plausibility.value())).cloned().collect();
        let abstracts = self
            .abstracts
            .iter()
            .filter(|a| threshold.keeps(a.plausibility.value()))
            .enumerate()
            .map(|(i, a)| AbstractTriple { id: AbstractId(i as u64), ..a.clone() })
            .collect();
        (concepts, abstracts)
    }

    /// Write `triples.jsonl`, `concepts.jsonl` and `abstracts.jsonl` into
    /// `dir` and return their paths in that order.
    pub fn write_to(&self, dir: &Path) -> io::Result<[PathBuf; 3]> {
        let paths = [dir.join("triples.jsonl"), dir.join("concepts.jsonl"), dir.join("abstracts.jsonl")];
        write_triples(io::BufWriter::new(std::fs::File::create(&paths[0])?), &self.triples)?;
        write_concepts(io::BufWriter::new(std::fs::File::create(&paths[1])?), &self.concepts)?;
        write_abstract_triples(io::BufWriter::new(std::fs::File::create(&paths[2])?), &self.abstracts, &self.triples)?;
        Ok(paths)
    }
}
