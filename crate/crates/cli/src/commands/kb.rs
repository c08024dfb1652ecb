use std::io::Write as _;

use anyhow::Result;
use concept_forge::augment::{augment as merge, expansion_report, write_augmented};
use concept_forge::ingest::{stats as corpus_stats, write_abstract_triples, write_concepts, write_triples};
use concept_forge::kb::KeywordExtractor;
use concept_forge::synth::{synthesize, write_qa, ConstraintIndex, ConstraintMode};

use super::{load_kb, load_templates, with_suffix, write_with, AugmentArgs, IngestArgs, StatsArgs, SynthArgs};
use crate::manifest::RunManifest;
use crate::Outcome;

pub fn ingest(args: IngestArgs) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let corpus = load_kb(&args.kb, &mut outcome)?;
    for (name, r) in [("triples", &corpus.triple_report), ("concepts", &corpus.concept_report), ("abstracts", &corpus.abstract_report)] {
        println!(
            "{name:<10} records {:>9}  retained {:>9}  filtered {:>9}  skipped {:>6}",
            r.records,
            r.retained,
            r.filtered,
            r.skipped.len()
        );
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let mut m = RunManifest::start("ingest", &args)?;
        m.inputs(args.kb.paths())?;
        let t = dir.join("triples.jsonl");
        let c = dir.join("concepts.jsonl");
        let a = dir.join("abstracts.jsonl");
        write_with(&t, |w| write_triples(w, &corpus.triples))?;
        write_with(&c, |w| write_concepts(w, &corpus.concepts))?;
        write_with(&a, |w| write_abstract_triples(w, &corpus.abstracts, &corpus.triples))?;
        for p in [&t, &c, &a] {
            m.output(p)?;
        }
        m.finish(&dir.join("ingest"))?;
    }
    Ok(outcome)
}

pub fn stats(args: StatsArgs) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let corpus = load_kb(&args.kb, &mut outcome)?;
    let s = corpus_stats(&corpus);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("{s}");
    }
    if let Some(out) = &args.out {
        let mut m = RunManifest::start("stats", &args)?;
        m.inputs(args.kb.paths())?;
        write_with(out, |w| serde_json::to_writer_pretty(&mut *w, &s).map_err(std::io::Error::from))?;
        m.output(out)?;
        m.finish(out)?;
    }
    Ok(outcome)
}

pub fn augment(args: AugmentArgs) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let corpus = load_kb(&args.kb, &mut outcome)?;
    let mut m = RunManifest::start("augment", &args)?;
    m.inputs(args.kb.paths())?;
    let merged = merge(corpus.triples, corpus.abstracts)?;
    write_with(&args.out, |w| write_augmented(w, &merged))?;
    print!("{}", expansion_report(&merged));
    println!(
        "dropped {} identity and {} duplicate abstraction(s)",
        merged.dropped_identity(),
        merged.dropped_duplicates()
    );
    m.output(&args.out)?;
    m.finish(&args.out)?;
    Ok(outcome)
}

pub fn synth(args: SynthArgs) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let corpus = load_kb(&args.kb, &mut outcome)?;
    let templates = load_templates(args.templates.as_deref())?;
    let mut m = RunManifest::start("synth", &args)?;
    m.seed = Some(args.seed);
    m.inputs(args.kb.paths())?;
    m.inputs(args.templates.iter())?;

    let abstracts = if args.no_augment { Vec::new() } else { corpus.abstracts };
    let merged = merge(corpus.triples, abstracts)?;
    let extractor = KeywordExtractor::default().with_stemming(args.stemming);
    let mode = if args.keyword_only { ConstraintMode::KeywordOnly } else { ConstraintMode::Concepts };
    let index = ConstraintIndex::build(&merged, &corpus.concepts, &extractor, mode);
    let out = synthesize(&merged, &index, &templates, args.seed)?;

    write_with(&args.out, |w| write_qa(w, &out.pairs))?;
    m.output(&args.out)?;
    if !out.skipped.is_empty() {
        let skipped = with_suffix(&args.out, ".skipped.jsonl");
        write_with(&skipped, |w| {
            for s in &out.skipped {
                serde_json::to_writer(&mut *w, &serde_json::json!({"source_id": s.source_id, "eligible": s.eligible}))?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })?;
        m.output(&skipped)?;
        outcome.warn(format!("{} triple(s) had fewer than 2 eligible distractors; see {}", out.skipped.len(), skipped.display()));
    }
    m.finish(&args.out)?;
    println!("wrote {} QA pair(s) to {}", out.pairs.len(), args.out.display());
    Ok(outcome)
}

