//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `CONCEPT_FORGE_ATOMIC_DIR` to a directory holding the full
//! `triples.jsonl`, `concepts.jsonl` and `abstracts.jsonl` to also check the
//! published corpus counts.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use concept_forge::augment::{augment, AugmentedCorpus};
use concept_forge::bridge::{mock_score, FnScorer, MockScorer};
use concept_forge::dynamics::{categorize, confidence, variability, Category, CheckpointScores, Thresholds};
use concept_forge::eval::{evaluate, item_prompt, load_benchmark, read_results, Benchmark};
use concept_forge::ingest::Threshold;
use concept_forge::kb::{build_constraint, ConceptEntry, KeywordExtractor, TripleId};
use concept_forge::scoring::{
    mlm_score, ranking_loss, LossSign, RankingLossParams, SequenceScore, TokenLogProbs,
};
use concept_forge::synth::{synthesize, ConstraintIndex, ConstraintMode, DistractorQuery, Origin, QAPair};
use concept_forge::synthetic::{generate, SyntheticConfig};
use concept_forge::templates::TemplateSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_concept-forge");

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn stats_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/stats").join(name)
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn lower_squeezed(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Constraint members per original, built one triple at a time from its
/// own concept entries.
fn naive_constraints(
    corpus: &AugmentedCorpus,
    concepts: &[ConceptEntry],
    mode: ConstraintMode,
) -> HashMap<TripleId, HashSet<String>> {
    let ex = KeywordExtractor::default();
    let mut by_head: HashMap<&str, Vec<&ConceptEntry>> = HashMap::new();
    if mode == ConstraintMode::Concepts {
        for c in concepts.iter().chain(corpus.abstractions().iter().map(|a| &a.concept_entry)) {
            by_head.entry(c.head.as_str()).or_default().push(c);
        }
    }
    corpus
        .originals()
        .iter()
        .map(|t| {
            let entries = by_head.get(t.head.as_str()).cloned().unwrap_or_default();
            let cs = build_constraint(&ex, t, entries).expect("entries share the head");
            (t.id, cs.members().map(str::to_string).collect())
        })
        .collect()
}

fn brute_force(
    corpus: &AugmentedCorpus,
    constraints: &HashMap<TripleId, HashSet<String>>,
    query: &DistractorQuery<'_>,
) -> Vec<TripleId> {
    let q: HashSet<&str> = query.constraint.members().collect();
    let gold = lower_squeezed(&query.gold_tail);
    corpus
        .originals()
        .iter()
        .filter(|c| c.relation == query.relation && Some(c.id) != query.source)
        .filter(|c| lower_squeezed(&c.tail) != gold)
        .filter(|c| constraints[&c.id].iter().all(|m| !q.contains(m.as_str())))
        .map(|c| c.id)
        .collect()
}

fn synthetic_corpus(n: usize, seed: u64) -> (Vec<ConceptEntry>, AugmentedCorpus) {
    let syn = generate(&SyntheticConfig::with_triples(n, seed));
    let (concepts, abstracts) = syn.retained(Threshold::new(0.9).unwrap());
    (concepts, augment(syn.triples, abstracts).unwrap())
}

fn fairness_and_reuse() -> (Outcome, Outcome) {
    let (concepts, corpus) = synthetic_corpus(100_000, 11);
    let ex = KeywordExtractor::default();
    let templates = TemplateSet::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let out = pool
        .install(|| {
            let index = ConstraintIndex::build(&corpus, &concepts, &ex, ConstraintMode::Concepts);
            synthesize(&corpus, &index, &templates, 7)
        })
        .unwrap();
    let elapsed = start.elapsed();

    let naive = naive_constraints(&corpus, &concepts, ConstraintMode::Concepts);
    let by_str: HashMap<String, &HashSet<String>> = naive.iter().map(|(id, s)| (id.to_string(), s)).collect();
    let abstract_of: HashMap<String, (TripleId, Option<String>)> = corpus
        .abstractions()
        .iter()
        .map(|a| (a.id.to_string(), (a.source_triple_id, ex.normalize_concept(&a.concept_entry.concept))))
        .collect();

    let fairness = (|| {
        let mut violations = 0usize;
        let mut abstract_pairs = 0usize;
        for p in &out.pairs {
            let mut q: HashSet<String> = match p.origin {
                Origin::Original => by_str[&p.source_id].clone(),
                Origin::Abstract => {
                    abstract_pairs += 1;
                    let (src, concept) = &abstract_of[&p.source_id];
                    let mut s = naive[src].clone();
                    s.extend(concept.clone());
                    s
                }
            };
            q.shrink_to_fit();
            for d in &p.distractor_source_ids {
                if by_str[d].iter().any(|m| q.contains(m)) {
                    violations += 1;
                }
            }
        }
        ensure(out.pairs.len() > 100_000 && abstract_pairs > 0, || {
            format!("only {} pairs ({abstract_pairs} abstract)", out.pairs.len())
        })?;
        ensure(violations == 0, || format!("{violations} overlapping distractor(s)"))?;
        ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:.1?}"))?;
        Ok(format!(
            "{} pairs ({} abstract), 0 overlaps, {:.1?} single-threaded, {} skipped",
            out.pairs.len(),
            abstract_pairs,
            elapsed,
            out.skipped.len()
        ))
    })();

    let reuse = (|| {
        let source_pairs: HashMap<&str, &QAPair> =
            out.pairs.iter().filter(|p| p.origin == Origin::Original).map(|p| (p.source_id.as_str(), p)).collect();
        let mut checked = 0usize;
        for p in out.pairs.iter().filter(|p| p.origin == Origin::Abstract) {
            let src = abstract_of[&p.source_id].0.to_string();
            let sp = source_pairs.get(src.as_str()).ok_or_else(|| format!("{} has no source pair", p.id))?;
            let mut a = p.options.clone();
            let mut b = sp.options.clone();
            a.sort();
            b.sort();
            ensure(a == b && p.gold() == sp.gold() && p.distractor_source_ids == sp.distractor_source_ids, || {
                format!("{} differs from {}", p.id, sp.id)
            })?;
            checked += 1;
        }
        ensure(checked > 0, || "no abstract pairs".into())?;
        Ok(format!("{checked} abstract pairs reuse their source options and gold"))
    })();
    (fairness, reuse)
}

fn oracle_equivalence() -> Outcome {
    let ex = KeywordExtractor::default();
    let mut queries = 0usize;
    let mut mismatches = 0usize;
    for seed in 0..50u64 {
        let n = 20 + (seed as usize * 197) % 981;
        let cfg = SyntheticConfig { triples: n, verbs: 15, nouns: 40, concept_classes: 8, tails: 30, seed, ..Default::default() };
        let syn = generate(&cfg);
        let (concepts, abstracts) = syn.retained(Threshold::new(0.9).unwrap());
        let corpus = augment(syn.triples, abstracts).unwrap();
        for mode in [ConstraintMode::Concepts, ConstraintMode::KeywordOnly] {
            let index = ConstraintIndex::build(&corpus, &concepts, &ex, mode);
            let naive = naive_constraints(&corpus, &concepts, mode);
            for t in corpus.originals() {
                let q = index.query_for_original(t);
                mismatches += (index.eligible_distractors(&q) != brute_force(&corpus, &naive, &q)) as usize;
                queries += 1;
            }
            for a in corpus.abstractions() {
                let q = index.query_for_abstract(a, &ex);
                mismatches += (index.eligible_distractors(&q) != brute_force(&corpus, &naive, &q)) as usize;
                queries += 1;
            }
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} of {queries} queries differ"))?;
    Ok(format!("50 corpora, {queries} queries, 0 mismatches"))
}

fn sha256_hex(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let syn = generate(&SyntheticConfig::with_triples(20_000, 3));
    let [t, c, a] = syn.write_to(dir.path()).map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("qa{threads}.jsonl"));
        run_cli(&[
            "--threads",
            threads,
            "synth",
            "--kb",
            t.to_str().unwrap(),
            "--concepts",
            c.to_str().unwrap(),
            "--abstract",
            a.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ])?;
        digests.push(sha256_hex(&out));
    }
    ensure(digests[0] == digests[1], || format!("{} vs {}", digests[0], digests[1]))?;
    Ok(format!("threads 1 and 8 both give sha256 {}", &digests[0][..16]))
}

fn scores(v: &[f64]) -> Vec<SequenceScore> {
    v.iter().map(|&x| SequenceScore::new(x).unwrap()).collect()
}

fn numeric_fidelity() -> Outcome {
    const TOL: f64 = 1e-9;
    let close = |name: &str, got: f64, want: f64| ensure((got - want).abs() <= TOL, || format!("{name}: {got} vs {want}"));
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());

    let tlp = TokenLogProbs::new(vec!["a".into(), "b".into(), "c".into()], vec![-1.0, -2.0, -3.0]).unwrap();
    close("mean score", mlm_score(&tlp).value(), 2.0)?;

    let p = RankingLossParams::new(1.0, 0).unwrap();
    let printed = ranking_loss(&scores(&[2.0, 0.5, 3.0]), p, LossSign::AsPrinted).unwrap();
    close("ranking loss", printed, ((1.0f64 - 2.0 + 0.5).max(0.0) + (1.0f64 - 2.0 + 3.0).max(0.0)) / 3.0)?;
    close("ranking loss", printed, 2.0 / 3.0)?;
    for sign in [LossSign::AsPrinted, LossSign::PredictionConsistent] {
        close("equal scores", ranking_loss(&scores(&[1.5, 1.5, 1.5]), p, sign).unwrap(), 2.0 / 3.0)?;
    }

    let cp = |k: usize, s: Vec<f64>| CheckpointScores::new(k, "q", s, 0).unwrap();
    let run = [cp(0, vec![0.0, 1.0, 1.0]), cp(1, vec![0.0, 0.0, 0.0])];
    close("confidence", confidence(&run).unwrap(), (sig(1.0) + sig(0.0)) / 2.0)?;
    close("variability", variability(&run).unwrap(), (sig(1.0) - 0.5) / 2.0)?;
    close("confidence", confidence(&run).unwrap(), 0.615_529_289_315_002_4)?;
    let t = Thresholds::default();
    ensure(
        categorize(0.9, 0.05, &t) == Category::Easy
            && categorize(0.5, 0.3, &t) == Category::Ambiguous
            && categorize(0.1, 0.05, &t) == Category::Hard,
        || "category thresholds".into(),
    )?;

    let mut rng = StdRng::seed_from_u64(2024);
    let mut cases = 0;
    for _ in 0..10_000 {
        let m = rng.random_range(2..=6);
        let s: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        let p = RankingLossParams::new(rng.random_range(0.01..3.0), rng.random_range(0..m)).unwrap();
        let consistent = ranking_loss(&scores(&s), p, LossSign::PredictionConsistent).unwrap();
        let flipped = ranking_loss(&scores(&neg), p, LossSign::AsPrinted).unwrap();
        ensure(consistent.to_bits() == flipped.to_bits(), || format!("sign substitution fails on {s:?}"))?;
        cases += 1;
    }
    Ok(format!("hand examples within 1e-9; sign substitution exact on {cases} random cases"))
}

fn stats_fixture_check() -> Outcome {
    let out = run_cli(&[
        "stats",
        "--json",
        "--kb",
        stats_fixture("triples.jsonl").to_str().unwrap(),
        "--concepts",
        stats_fixture("concepts.jsonl").to_str().unwrap(),
        "--abstract",
        stats_fixture("abstracts.jsonl").to_str().unwrap(),
    ])?;
    let mut got: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let mut want: Value =
        serde_json::from_str(&std::fs::read_to_string(stats_fixture("expected.json")).unwrap()).unwrap();
    for k in ["concepts_filtered", "abstracts_filtered"] {
        want.as_object_mut().unwrap().remove(k);
    }
    for k in ["avg_concepts_per_event", "avg_concepts_per_instance"] {
        let g = got.as_object_mut().unwrap().remove(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
        let w = want.as_object_mut().unwrap().remove(k).unwrap().as_f64().unwrap();
        ensure((g - w).abs() < 1e-12, || format!("{k}: {g} vs {w}"))?;
    }
    ensure(got == want, || format!("counts differ: {got} vs {want}"))?;
    Ok("500-row fixture matches precomputed counts".into())
}

fn stats_real_data() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("CONCEPT_FORGE_ATOMIC_DIR")?);
    Some((|| {
        let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
        let out = run_cli(&[
            "stats",
            "--json",
            "--kb",
            &p("triples.jsonl"),
            "--concepts",
            &p("concepts.jsonl"),
            "--abstract",
            &p("abstracts.jsonl"),
        ])?;
        let v: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
        let checks = [
            ("total_triples", v["total_triples"].clone(), json!(572_053)),
            ("xEffect", v["triples_per_relation"]["xEffect"].clone(), json!(78_832)),
            ("abstract_annotated", v["abstract_annotated"].clone(), json!(81_197)),
            ("abstract_pseudo", v["abstract_pseudo"].clone(), json!(2_030_135)),
        ];
        for (name, got, want) in checks {
            ensure(got == want, || format!("{name}: {got} vs {want}"))?;
        }
        let avg = v["avg_concepts_per_event"].as_f64().unwrap_or(f64::NAN);
        ensure(format!("{avg:.2}") == "32.73", || format!("concepts/event {avg}"))?;
        Ok("published counts reproduced".into())
    })())
}

fn csqa_fixture(path: &Path, n: usize, rng: &mut StdRng) {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for i in 0..n {
        let letters = ["A", "B", "C", "D", "E"];
        let choices: Vec<Value> =
            letters.iter().enumerate().map(|(k, l)| json!({"label": l, "text": format!("answer {i} {k}")})).collect();
        let key = letters[rng.random_range(0..5)];
        let row = json!({"id": format!("cs{i}"), "question": {"stem": format!("Where would you put item {i}?"), "choices": choices}, "answerKey": key});
        writeln!(w, "{row}").unwrap();
    }
}

fn piqa_fixture(path: &Path, n: usize, rng: &mut StdRng) {
    let words = ["cup", "stone", "rope", "water", "paper", "knife", "glue", "towel", "brush", "sand", "oil", "box"];
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for i in 0..n {
        let mut phrase = |len: usize| (0..len).map(|_| words[rng.random_range(0..words.len())]).collect::<Vec<_>>().join(" ");
        let goal = format!("To fix the {}", phrase(2));
        let sol1 = format!("use the {}", phrase(3));
        let sol2 = format!("use the {}", phrase(3));
        let row = json!({"id": format!("pq{i}"), "goal": goal, "sol1": sol1, "sol2": sol2, "label": rng.random_range(0..2)});
        writeln!(w, "{row}").unwrap();
    }
}

fn mock_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(99);
    let templates = TemplateSet::default();

    let csqa = dir.path().join("csqa.jsonl");
    csqa_fixture(&csqa, 200, &mut rng);
    let loaded = load_benchmark(Benchmark::Csqa, &csqa, None).map_err(|e| e.to_string())?;
    let gold_texts: HashSet<String> = loaded
        .items
        .iter()
        .map(|it| item_prompt(it, it.gold.unwrap(), Benchmark::Csqa, &templates).unwrap())
        .collect();
    let rigged = |favor: bool| {
        let gold_texts = gold_texts.clone();
        FnScorer(move |text: &str| {
            if gold_texts.contains(text) {
                let lp = if favor { -0.01 } else { -50.0 };
                TokenLogProbs::new(vec![text.to_string()], vec![lp]).map_err(|e| {
                    concept_forge::bridge::BridgeError::Protocol { id: String::new(), message: e.to_string() }
                })
            } else {
                mock_score(text)
            }
        })
    };
    let favored = evaluate(&loaded.items, &rigged(true), &templates, Benchmark::Csqa);
    let against = evaluate(&loaded.items, &rigged(false), &templates, Benchmark::Csqa);
    let acc_rigged = favored.accuracy().unwrap_or(f64::NAN);
    let acc_anti = against.accuracy().unwrap_or(f64::NAN);
    ensure(favored.results.len() == 200 && acc_rigged == 1.0, || format!("rigged accuracy {acc_rigged}"))?;
    ensure(acc_anti == 0.0, || format!("anti-rigged accuracy {acc_anti}"))?;

    let piqa = dir.path().join("piqa.jsonl");
    piqa_fixture(&piqa, 1000, &mut rng);
    let results = dir.path().join("piqa.results.jsonl");
    let stdout = run_cli(&[
        "eval",
        "--bench",
        "piqa",
        "--data",
        piqa.to_str().unwrap(),
        "--scorer",
        "mock",
        "--out",
        results.to_str().unwrap(),
    ])?;
    let rows = read_results(&results).map_err(|e| e.to_string())?;
    let correct = rows.iter().filter(|r| r.gold == Some(r.pred)).count();
    let acc = correct as f64 / rows.len() as f64;
    ensure(rows.len() == 1000, || format!("{} results", rows.len()))?;
    ensure(stdout.contains(&format!("accuracy {acc:.4}")), || format!("accuracy line disagrees: {stdout}"))?;
    ensure((0.45..=0.55).contains(&acc), || format!("uniform mock accuracy {acc}"))?;

    // Library and CLI paths agree on the same mock.
    let lib = evaluate(&load_benchmark(Benchmark::Piqa, &piqa, None).unwrap().items, &MockScorer, &templates, Benchmark::Piqa);
    ensure(lib.results == rows, || "library and CLI results differ".into())?;
    Ok(format!("rigged 1.000 on 200, anti-rigged 0.000, uniform {acc:.3} on 1000"))
}

fn bar_casino() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let triples = dir.path().join("triples.jsonl");
    let concepts = dir.path().join("concepts.jsonl");
    std::fs::write(
        &triples,
        [
            json!({"head": "PersonX arrives at the bar", "relation": "xWant", "tail": "to relax"}),
            json!({"head": "PersonX is at the casino", "relation": "xWant", "tail": "have a drink"}),
            json!({"head": "PersonX reads a book", "relation": "xWant", "tail": "to learn more"}),
            json!({"head": "PersonX walks the dog", "relation": "xWant", "tail": "to rest"}),
        ]
        .iter()
        .map(|v| format!("{v}\n"))
        .collect::<String>(),
    )
    .unwrap();
    std::fs::write(
        &concepts,
        [
            json!({"head": "PersonX arrives at the bar", "start": 23, "end": 26, "concept": "entertainment place", "plausibility": 0.95}),
            json!({"head": "PersonX is at the casino", "start": 18, "end": 24, "concept": "entertainment place", "plausibility": 0.97}),
        ]
        .iter()
        .map(|v| format!("{v}\n"))
        .collect::<String>(),
    )
    .unwrap();

    let distractors_of_bar = |extra: &[&str], seed: u64| -> Result<BTreeSet<String>, String> {
        let out = dir.path().join(format!("qa{seed}{}.jsonl", extra.len()));
        let seed = seed.to_string();
        let mut args = vec![
            "synth",
            "--kb",
            triples.to_str().unwrap(),
            "--concepts",
            concepts.to_str().unwrap(),
            "--seed",
            &seed,
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        run_cli(&args)?;
        let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        let bar: QAPair = text
            .lines()
            .map(|l| serde_json::from_str::<QAPair>(l).unwrap())
            .find(|p| p.source_id == "t0")
            .ok_or("no pair for the bar triple")?;
        Ok(bar.distractor_source_ids.into_iter().collect())
    };

    let mut keyword_hits = 0;
    for seed in 0..20 {
        let with_concepts = distractors_of_bar(&[], seed)?;
        ensure(with_concepts == BTreeSet::from(["t2".to_string(), "t3".to_string()]), || {
            format!("concept mode chose {with_concepts:?}")
        })?;
        keyword_hits += distractors_of_bar(&["--keyword-only"], seed)?.contains("t1") as usize;
    }
    ensure(keyword_hits > 0, || "casino never chosen under --keyword-only".into())?;
    Ok(format!("casino excluded under concepts; chosen in {keyword_hits}/20 seeds under --keyword-only"))
}

fn main() -> ExitCode {
    let mut lines: Vec<(&str, Outcome)> = Vec::new();
    let guarded = |f: &dyn Fn() -> Outcome| {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        })
    };

    let (fairness, reuse) = catch_unwind(fairness_and_reuse)
        .unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    lines.push(("fairness sweep (100K triples)", fairness));
    lines.push(("oracle equivalence (50 corpora)", guarded(&oracle_equivalence)));
    lines.push(("determinism (synth --seed 7, threads 1 vs 8)", guarded(&determinism)));
    lines.push(("numeric fidelity (score, loss, confidence, variability)", guarded(&numeric_fidelity)));
    lines.push(("statistics (fixture)", guarded(&stats_fixture_check)));
    match stats_real_data() {
        Some(r) => lines.push(("statistics (full corpus)", r)),
        None => println!("SKIP  statistics (full corpus): CONCEPT_FORGE_ATOMIC_DIR not set, fixture substitutes"),
    }
    lines.push(("abstract pairs reuse source options", reuse));
    lines.push(("end-to-end with mock scorer", guarded(&mock_end_to_end)));
    lines.push(("bar/casino regression", guarded(&bar_casino)));

    let mut failed = 0;
    for (name, r) in &lines {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
