use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use concept_forge::bridge::{serve_mock, Scorer};
use concept_forge::dynamics::{
    compute, dynamics_summary, read_dynamics_csv, write_dynamics_csv, write_medians_csv, write_summary_csv,
    CheckpointScores, Thresholds,
};
use concept_forge::eval::{
    attach_similarity, load_benchmark, read_results, read_similarity, split_accuracy, split_by_similarity,
    split_deltas, write_csv, write_results, Benchmark,
};
use concept_forge::ingest::{load_corpus, IngestConfig, Threshold};
use concept_forge::kb::Relation;
use concept_forge::scoring::{
    concat_for_scoring, mlm_score, predict, ranking_loss, LossSign, Prompt, RankingLossParams, ScoreRecord,
    SequenceScore,
};
use concept_forge::synth::QAPair;
use concept_forge::templates::{subject_of, TemplateSet};
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use super::{load_templates, with_suffix, write_with, DynamicsArgs, EvalArgs, LossSignArg, MockScorerArgs, ScoreArgs};
use crate::manifest::RunManifest;
use crate::scorer::from_spec;
use crate::Outcome;

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// Head, relation and subject behind a QA source id.
struct Source {
    head: String,
    relation: Relation,
    subject: String,
}

fn source_table(args: &ScoreArgs) -> Result<Option<HashMap<String, Source>>> {
    let Some(kb) = &args.kb else { return Ok(None) };
    let mut cfg = IngestConfig::new(kb);
    cfg.abstracts = args.abstracts.clone();
    cfg.plausibility_threshold = Threshold::new(args.threshold)?;
    let corpus = load_corpus(&cfg)?;
    let mut table = HashMap::with_capacity(corpus.triples.len() + corpus.abstracts.len());
    let mut heads = HashMap::with_capacity(corpus.triples.len());
    for t in &corpus.triples {
        heads.insert(t.id, t.head.as_str());
        let subject = subject_of(&t.head).to_string();
        table.insert(t.id.to_string(), Source { head: t.head.clone(), relation: t.relation, subject });
    }
    for a in &corpus.abstracts {
        let source_head = heads.get(&a.source_triple_id).copied().unwrap_or(&a.concept_entry.head);
        let subject = subject_of(source_head).to_string();
        table.insert(a.id.to_string(), Source { head: a.head_c.clone(), relation: a.relation, subject });
    }
    Ok(Some(table))
}

fn option_text(
    pair: &QAPair,
    option: &str,
    sources: Option<&HashMap<String, Source>>,
    templates: &TemplateSet,
) -> Result<String> {
    let prompt = match sources {
        Some(table) => {
            let s = table
                .get(&pair.source_id)
                .ok_or_else(|| anyhow!("{}: source {} not found in the knowledge base", pair.id, pair.source_id))?;
            Prompt::Triple { head: &s.head, relation: s.relation, subject: Some(&s.subject) }
        }
        None => Prompt::Text { benchmark: "default", question: &pair.question },
    };
    Ok(concat_for_scoring(None, prompt, option, templates)?)
}

fn score_pair(
    pair: &QAPair,
    scorer: &dyn Scorer,
    sources: Option<&HashMap<String, Source>>,
    templates: &TemplateSet,
    args: &ScoreArgs,
    sign: LossSign,
) -> Result<(ScoreRecord, f64)> {
    let mut scores = Vec::with_capacity(pair.options.len());
    for option in &pair.options {
        let text = option_text(pair, option, sources, templates)?;
        let tlp = scorer.score(&text).with_context(|| format!("scoring {}", pair.id))?;
        scores.push(mlm_score(&tlp));
    }
    let params = RankingLossParams::new(args.margin, pair.gold_index)?;
    let loss = ranking_loss(&scores, params, sign).with_context(|| pair.id.clone())?;
    let record = ScoreRecord {
        qa_id: pair.id.clone(),
        option_scores: scores.iter().map(|s: &SequenceScore| s.value()).collect(),
        pred: predict(&scores)?,
        gold: Some(pair.gold_index),
        checkpoint: args.checkpoint,
    };
    Ok((record, loss))
}

pub fn score(args: ScoreArgs) -> Result<Outcome> {
    let outcome = Outcome::default();
    let pairs: Vec<QAPair> = read_jsonl(&args.qa)?;
    let templates = load_templates(args.templates.as_deref())?;
    let sources = source_table(&args)?;
    let scorer = from_spec(args.scorer.as_deref(), args.max_len)?;
    let sign = match args.loss_sign {
        LossSignArg::AsPrinted => LossSign::AsPrinted,
        LossSignArg::PredictionConsistent => LossSign::PredictionConsistent,
    };
    let mut m = RunManifest::start("score", &args)?;
    m.input(&args.qa)?;
    m.inputs(args.kb.iter().chain(args.abstracts.iter()).chain(args.templates.iter()))?;

    let scored: Vec<(ScoreRecord, f64)> = pairs
        .par_iter()
        .map(|p| score_pair(p, scorer.as_ref(), sources.as_ref(), &templates, &args, sign))
        .collect::<Result<_>>()?;

    write_with(&args.out, |w| {
        for (r, _) in &scored {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    m.output(&args.out)?;
    m.finish(&args.out)?;

    let n = scored.len().max(1) as f64;
    let correct = scored.iter().filter(|(r, _)| r.gold == Some(r.pred)).count();
    let loss: f64 = scored.iter().map(|(_, l)| l).sum::<f64>() / n;
    println!("scored {} pair(s): accuracy {:.4}, mean loss {:.4}", scored.len(), correct as f64 / n, loss);
    Ok(outcome)
}

pub fn eval(args: EvalArgs) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let bench: Benchmark = args.bench.parse()?;
    let mut loaded = load_benchmark(bench, &args.data, args.labels.as_deref())?;
    for w in &loaded.warnings {
        outcome.warn(w.clone());
    }
    let split = match &args.similarity {
        Some(path) => {
            let sims = read_similarity(path)?;
            let missing = attach_similarity(&mut loaded.items, &sims);
            if missing > 0 {
                bail!("{missing} item(s) have no similarity score in {}", path.display());
            }
            Some(split_by_similarity(&loaded.items, args.quantile)?)
        }
        None => None,
    };
    let templates = load_templates(args.templates.as_deref())?;
    let scorer = from_spec(args.scorer.as_deref(), args.max_len)?;
    let mut m = RunManifest::start("eval", &args)?;
    m.input(&args.data)?;
    m.inputs(args.labels.iter().chain(args.similarity.iter()).chain(args.baseline.iter()).chain(args.templates.iter()))?;

    let report = concept_forge::eval::evaluate(&loaded.items, scorer.as_ref(), &templates, bench);
    write_with(&args.out, |w| write_results(w, &report.results))?;
    m.output(&args.out)?;
    if let Some(err) = report.error {
        m.finish(&args.out)?;
        return Err(anyhow!(err)
            .context(format!("evaluation aborted after {} item(s); partial results in {}", report.results.len(), args.out.display())));
    }

    match report.accuracy() {
        Some(acc) => println!("{} accuracy {:.4} ({} items)", bench, acc, report.results.len()),
        None => println!("{} scored {} unlabeled item(s)", bench, report.results.len()),
    }
    if let Some(split) = &split {
        let rows = split_accuracy(&report.results, split);
        let path = with_suffix(&args.out, ".splits.csv");
        write_with(&path, |w| write_csv(w, &rows).map_err(std::io::Error::other))?;
        m.output(&path)?;
        for r in &rows {
            let acc = r.accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}"));
            println!("  {:<9} {:>6} items  accuracy {acc}", r.split, r.items);
        }
        if let Some(baseline) = &args.baseline {
            let base = read_results(baseline)?;
            let deltas = split_deltas(&base, &report.results, split)?;
            let path = with_suffix(&args.out, ".split_deltas.csv");
            write_with(&path, |w| write_csv(w, &deltas).map_err(std::io::Error::other))?;
            m.output(&path)?;
        }
    }
    m.finish(&args.out)?;
    Ok(outcome)
}

pub fn dynamics(args: DynamicsArgs) -> Result<Outcome> {
    let outcome = Outcome::default();
    let mut m = RunManifest::start("dynamics", &args)?;
    if let [a, b] = args.diff.as_slice() {
        m.inputs([a, b])?;
        let ra = read_dynamics_csv(File::open(a).with_context(|| format!("cannot open {}", a.display()))?)?;
        let rb = read_dynamics_csv(File::open(b).with_context(|| format!("cannot open {}", b.display()))?)?;
        let summary = dynamics_summary(&ra, &rb)?;
        write_with(&args.out, |w| write_summary_csv(w, &summary).map_err(std::io::Error::other))?;
        let medians = with_suffix(&args.out, ".medians.csv");
        write_with(&medians, |w| write_medians_csv(w, &summary).map_err(std::io::Error::other))?;
        m.output(&args.out)?;
        m.output(&medians)?;
        m.finish(&args.out)?;
        let md = &summary.medians;
        println!(
            "median confidence {:+.4} ({:.4} -> {:.4}), median variability {:+.4} ({:.4} -> {:.4})",
            md.median_confidence_delta,
            md.median_confidence_a,
            md.median_confidence_b,
            md.median_variability_delta,
            md.median_variability_a,
            md.median_variability_b
        );
        return Ok(outcome);
    }

    let gold: HashMap<String, usize> = match &args.qa {
        Some(p) => {
            m.input(p)?;
            read_jsonl::<QAPair>(p)?.into_iter().map(|q| (q.id, q.gold_index)).collect()
        }
        None => HashMap::new(),
    };
    let mut checkpoints = Vec::new();
    for (k, path) in args.scores.iter().enumerate() {
        m.input(path)?;
        for r in read_jsonl::<ScoreRecord>(path)? {
            let g = r
                .gold
                .or_else(|| gold.get(&r.qa_id).copied())
                .ok_or_else(|| anyhow!("{}: no gold index for {} (pass --qa)", path.display(), r.qa_id))?;
            checkpoints.push(CheckpointScores::new(r.checkpoint.unwrap_or(k), r.qa_id, r.option_scores, g)?);
        }
    }
    let thresholds = Thresholds { conf_hi: args.conf_hi, conf_lo: args.conf_lo, var_hi: args.var_hi };
    let records = compute(checkpoints, &thresholds)?;
    write_with(&args.out, |w| write_dynamics_csv(w, &records).map_err(std::io::Error::other))?;
    m.output(&args.out)?;
    m.finish(&args.out)?;
    let mut counts = [0usize; 3];
    for r in &records {
        counts[r.category as usize] += 1;
    }
    println!("{} question(s): easy {}, ambiguous {}, hard {}", records.len(), counts[0], counts[1], counts[2]);
    Ok(outcome)
}

pub fn mock_scorer(args: MockScorerArgs) -> Result<Outcome> {
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    serve_mock(stdin, stdout, args.limit)?;
    Ok(Outcome::default())
}

