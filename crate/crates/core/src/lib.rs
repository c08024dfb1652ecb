//! Conceptualization-augmented commonsense QA pipeline.
//!
//! The crate turns a commonsense knowledge base of `(head, relation, tail)`
//! triples into multiple-choice training questions whose distractors are
//! filtered by keyword and concept overlap, and scores/evaluates
//! multiple-choice questions through a pluggable masked-LM scorer.

pub mod kb;
pub mod ingest;
pub mod augment;
pub mod seeding;
pub mod synth;
pub mod scoring;
pub mod dynamics;
pub mod bridge;
pub mod eval;
pub mod synthetic;
pub mod templates;
