//! Multiple-choice QA synthesis with concept-constrained distractors.
//!
//! Each original triple becomes one question whose gold answer is its tail
//! and whose two distractors are tails of other original triples with the
//! same relation and a disjoint constraint set. Each retained abstraction
//! of that triple becomes a question with the conceptualized head and the
//! same three answers.

mod index;

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{ConstraintIndex, ConstraintMode, DistractorQuery};

use crate::augment::AugmentedCorpus;
use crate::kb::{normalize_text, KeywordExtractor, TripleId};
use crate::seeding::{derive_rng, Domain};
use crate::templates::{subject_of, TemplateError, TemplateSet};

/// Rejection-sampling budget before falling back to the exact eligible set.
pub const MAX_REJECTION_ATTEMPTS: usize = 200;

/// Distractors drawn per question.
pub const DISTRACTORS: usize = 2;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Abstract,
}

/// One synthesized multiple-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub question: String,
    pub options: Vec<String>,
    #[serde(rename = "gold")]
    pub gold_index: usize,
    pub source_id: String,
    #[serde(rename = "distractor_ids")]
    pub distractor_source_ids: Vec<String>,
    pub origin: Origin,
}

impl QAPair {
    pub fn gold(&self) -> &str {
        &self.options[self.gold_index]
    }
}

/// A triple that could not be turned into a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedTriple {
    pub source_id: String,
    pub eligible: usize,
}

impl fmt::Display for SkippedTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: only {} eligible distractor(s)", self.source_id, self.eligible)
    }
}

fn pick(rng: &mut ChaCha8Rng, len: usize) -> usize {
    rng.random_range(0..len)
}

fn sample_with(
    query: &DistractorQuery<'_>,
    index: &ConstraintIndex,
    rng: &mut ChaCha8Rng,
) -> Result<[TripleId; DISTRACTORS], usize> {
    let bucket = index.bucket_positions(query.relation);
    let gold_key = normalize_text(&query.gold_tail);
    let mut chosen: Vec<u32> = Vec::with_capacity(DISTRACTORS);

    if !bucket.is_empty() {
        for _ in 0..MAX_REJECTION_ATTEMPTS {
            let p = bucket[pick(rng, bucket.len())];
            if !chosen.contains(&p) && index.admits(p, query, &gold_key) {
                chosen.push(p);
                if chosen.len() == DISTRACTORS {
                    break;
                }
            }
        }
    }

    if chosen.len() < DISTRACTORS {
        let mut rest: Vec<u32> =
            index.eligible_positions(query).into_iter().filter(|p| !chosen.contains(p)).collect();
        if chosen.len() + rest.len() < DISTRACTORS {
            return Err(chosen.len() + rest.len());
        }
        while chosen.len() < DISTRACTORS {
            let i = pick(rng, rest.len());
            chosen.push(rest.swap_remove(i));
        }
    }
    Ok([index.id_at(chosen[0]), index.id_at(chosen[1])])
}

/// Draw two distinct eligible distractors uniformly without replacement.
///
/// The random stream is keyed by `(seed, key)`; for original triples the key
/// is the triple id. Returns the eligible count when fewer than two exist.
pub fn sample_distractors(
    query: &DistractorQuery<'_>,
    index: &ConstraintIndex,
    seed: u64,
    key: u64,
) -> Result<[TripleId; DISTRACTORS], SkippedTriple> {
    let mut rng = derive_rng(seed, Domain::Original, key);
    sample_with(query, index, &mut rng).map_err(|eligible| SkippedTriple {
        source_id: query.source.map(|s| s.to_string()).unwrap_or_default(),
        eligible,
    })
}

fn shuffled(options: &[String], gold: usize, rng: &mut ChaCha8Rng) -> (Vec<String>, usize) {
    let mut order: Vec<usize> = (0..options.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let gold_index = order.iter().position(|&i| i == gold).expect("gold is one of the options");
    (order.into_iter().map(|i| options[i].clone()).collect(), gold_index)
}

#[derive(Debug, Clone, Default)]
pub struct SynthOutput {
    pub pairs: Vec<QAPair>,
    pub skipped: Vec<SkippedTriple>,
}

/// Synthesize QA pairs for every original triple and its abstractions.
///
/// Output order follows the corpus: each original's pair, then its
/// abstractions' pairs. Work is spread over the current rayon pool, and the
/// result is identical for any pool size.
pub fn synthesize(
    corpus: &AugmentedCorpus,
    index: &ConstraintIndex,
    templates: &TemplateSet,
    seed: u64,
) -> Result<SynthOutput, SynthError> {
    let per_triple: Vec<Result<Result<Vec<QAPair>, SkippedTriple>, SynthError>> = corpus
        .originals()
        .par_iter()
        .map(|t| {
            let query = index.query_for_original(t);
            let mut rng = derive_rng(seed, Domain::Original, t.id.0);
            let distractors = match sample_with(&query, index, &mut rng) {
                Ok(d) => d,
                Err(eligible) => return Ok(Err(SkippedTriple { source_id: t.id.to_string(), eligible })),
            };
            let answers: Vec<String> = std::iter::once(t.tail.clone())
                .chain(distractors.iter().map(|d| {
                    corpus.original(*d).expect("index covers originals").tail.clone()
                }))
                .collect();
            let distractor_ids: Vec<String> = distractors.iter().map(ToString::to_string).collect();
            let subject = subject_of(&t.head);

            let mut pairs = Vec::with_capacity(1 + corpus.siblings(t.id).count());
            let (options, gold_index) = shuffled(&answers, 0, &mut rng);
            pairs.push(QAPair {
                id: format!("q-{}", t.id),
                question: templates.question(&t.head, subject, t.relation)?,
                options,
                gold_index,
                source_id: t.id.to_string(),
                distractor_source_ids: distractor_ids.clone(),
                origin: Origin::Original,
            });
            for a in corpus.siblings(t.id) {
                let mut arng = derive_rng(seed, Domain::Abstract, a.id.0);
                let (options, gold_index) = shuffled(&answers, 0, &mut arng);
                pairs.push(QAPair {
                    id: format!("q-{}", a.id),
                    question: templates.question(&a.head_c, subject, a.relation)?,
                    options,
                    gold_index,
                    source_id: a.id.to_string(),
                    distractor_source_ids: distractor_ids.clone(),
                    origin: Origin::Abstract,
                });
            }
            Ok(Ok(pairs))
        })
        .collect();

    let mut out = SynthOutput::default();
    for r in per_triple {
        match r? {
            Ok(pairs) => out.pairs.extend(pairs),
            Err(skip) => {
                log::debug!("skipped {skip}");
                out.skipped.push(skip)
            }
        }
    }
    Ok(out)
}

/// Convenience wrapper: build the index and synthesize in one call.
pub fn synthesize_corpus(
    corpus: &AugmentedCorpus,
    concepts: &[crate::kb::ConceptEntry],
    extractor: &KeywordExtractor,
    mode: ConstraintMode,
    templates: &TemplateSet,
    seed: u64,
) -> Result<(ConstraintIndex, SynthOutput), SynthError> {
    let index = ConstraintIndex::build(corpus, concepts, extractor, mode);
    let out = synthesize(corpus, &index, templates, seed)?;
    Ok((index, out))
}

pub fn write_qa<W: Write>(mut w: W, pairs: &[QAPair]) -> io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
