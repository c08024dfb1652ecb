use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_concept-forge");

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/stats")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SCORER_URL").output().unwrap()
}

fn kb_args() -> Vec<String> {
    vec![
        "--kb".into(),
        fixture("triples.jsonl"),
        "--concepts".into(),
        fixture("concepts.jsonl"),
        "--abstract".into(),
        fixture("abstracts.jsonl"),
    ]
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("qa{seed}.jsonl"));
    let mut args = vec!["synth".to_string(), "--seed".into(), seed.into(), "--out".into(), p(&out).into()];
    args.extend(kb_args());
    let o = Command::new(BIN).args(&args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["synth", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["nonsense"]).status.code(), Some(2));
    assert_eq!(cli(&["stats", "--kb", "/no/such/file.jsonl"]).status.code(), Some(2));
}

#[test]
fn strict_turns_skipped_lines_into_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.jsonl");
    std::fs::write(
        &kb,
        "{\"head\": \"PersonX eats\", \"relation\": \"xWant\", \"tail\": \"to sleep\"}\n{\"head\": \"PersonX runs\", \"relation\": \"xFoo\", \"tail\": \"x\"}\n",
    )
    .unwrap();
    let lenient = cli(&["stats", "--kb", p(&kb)]);
    assert_eq!(lenient.status.code(), Some(0));
    let strict = cli(&["--strict", "stats", "--kb", p(&kb)]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains(":2:"));
}

#[test]
fn stats_table_reports_fixture_totals() {
    let mut args = vec!["stats".to_string()];
    args.extend(kb_args());
    let o = Command::new(BIN).args(&args).output().unwrap();
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    let total = table.lines().find(|l| l.starts_with("total")).unwrap();
    assert_eq!(total.split_whitespace().collect::<Vec<_>>(), ["total", "500", "34", "100"]);
    assert!(table.contains("unique events            109"));
}

#[test]
fn synth_writes_manifest_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth(dir.path(), "7");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("qa7.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "synth");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(manifest["outputs"][0]["bytes"], bytes.len() as u64);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let again = synth(dir.path(), "7");
    assert_eq!(std::fs::read(again).unwrap(), bytes);
    let other = synth(dir.path(), "8");
    assert_ne!(std::fs::read(other).unwrap(), bytes);
}

#[test]
fn subprocess_scorer_matches_in_process_mock_and_survives_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let qa = synth(dir.path(), "1");
    let inproc = dir.path().join("inproc.jsonl");
    let piped = dir.path().join("piped.jsonl");
    let flaky = dir.path().join("flaky.jsonl");
    let o = cli(&["score", "--qa", p(&qa), "--scorer", "mock", "--out", p(&inproc)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cmd = format!("{BIN} mock-scorer");
    let o = cli(&["score", "--qa", p(&qa), "--scorer", &cmd, "--out", p(&piped)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&inproc).unwrap(), std::fs::read(&piped).unwrap());

    // The child exits after every 50 replies and is respawned.
    let cmd = format!("{BIN} mock-scorer --limit 50");
    let o = cli(&["--threads", "1", "score", "--qa", p(&qa), "--scorer", &cmd, "--out", p(&flaky)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&inproc).unwrap(), std::fs::read(&flaky).unwrap());
}

#[test]
fn scorer_falls_back_to_env_and_fails_without_one() {
    let dir = tempfile::tempdir().unwrap();
    let qa = synth(dir.path(), "2");
    let out = dir.path().join("s.jsonl");
    let none = cli(&["score", "--qa", p(&qa), "--out", p(&out)]);
    assert_eq!(none.status.code(), Some(2));
    let env = Command::new(BIN)
        .args(["score", "--qa", p(&qa), "--out", p(&out)])
        .env("SCORER_URL", "mock")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(jsonl(&out).len(), jsonl(&qa).len());
}

#[test]
fn statement_form_uses_the_knowledge_base() {
    let dir = tempfile::tempdir().unwrap();
    let qa = synth(dir.path(), "3");
    let question = dir.path().join("q.jsonl");
    let statement = dir.path().join("st.jsonl");
    assert!(cli(&["score", "--qa", p(&qa), "--scorer", "mock", "--out", p(&question)]).status.success());
    let o = cli(&[
        "score",
        "--qa",
        p(&qa),
        "--scorer",
        "mock",
        "--kb",
        &fixture("triples.jsonl"),
        "--abstract",
        &fixture("abstracts.jsonl"),
        "--out",
        p(&statement),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = jsonl(&question);
    let b = jsonl(&statement);
    assert_eq!(a.len(), b.len());
    assert_ne!(a, b);
}

fn anli_fixture(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("anli.jsonl");
    let rows: String = (0..n)
        .map(|i| {
            format!(
                "{}\n",
                serde_json::json!({"story_id": format!("s{i}"), "obs1": format!("Ann went out {i}."), "obs2": "She came home happy.",
                    "hyp1": format!("She met friend {i}."), "hyp2": "She lost her keys.", "label": 1 + i % 2})
            )
        })
        .collect();
    std::fs::write(&path, rows).unwrap();
    path
}

#[test]
fn eval_reports_accuracy_and_similarity_splits() {
    let dir = tempfile::tempdir().unwrap();
    let data = anli_fixture(dir.path(), 40);
    let sim = dir.path().join("sim.jsonl");
    let sims: String = (0..40).map(|i| format!("{{\"id\": \"s{i}\", \"similarity\": {}}}\n", i as f64 / 40.0)).collect();
    std::fs::write(&sim, sims).unwrap();
    let out = dir.path().join("results.jsonl");
    let o = cli(&["eval", "--bench", "anli", "--data", p(&data), "--scorer", "mock", "--out", p(&out), "--similarity", p(&sim)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let rows = jsonl(&out);
    let correct = rows.iter().filter(|r| r["pred"] == r["gold"]).count();
    assert!(stdout.contains(&format!("aNLI accuracy {:.4} (40 items)", correct as f64 / 40.0)), "{stdout}");
    let splits = std::fs::read_to_string(dir.path().join("results.jsonl.splits.csv")).unwrap();
    assert!(splits.contains("easy,20,") && splits.contains("difficult,20,"), "{splits}");

    // The count differs from the published split: a warning, so --strict exits 1.
    let strict = cli(&["--strict", "eval", "--bench", "anli", "--data", p(&data), "--scorer", "mock", "--out", p(&out)]);
    assert_eq!(strict.status.code(), Some(1));

    let base = dir.path().join("base.jsonl");
    std::fs::copy(&out, &base).unwrap();
    let o = cli(&[
        "eval", "--bench", "anli", "--data", p(&data), "--scorer", "mock", "--out", p(&out), "--similarity", p(&sim), "--baseline", p(&base),
    ]);
    assert!(o.status.success());
    let deltas = std::fs::read_to_string(dir.path().join("results.jsonl.split_deltas.csv")).unwrap();
    assert!(deltas.starts_with("split,items,accuracy_a,accuracy_b,delta"));
    assert!(deltas.lines().skip(1).all(|l| l.ends_with(",0.0")), "{deltas}");
}

#[test]
fn eval_aborts_with_partial_log_when_scorer_dies() {
    let dir = tempfile::tempdir().unwrap();
    let data = anli_fixture(dir.path(), 10);
    let out = dir.path().join("results.jsonl");
    let o = cli(&["eval", "--bench", "anli", "--data", p(&data), "--scorer", "/no/such/scorer", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("partial results"));
    assert!(out.exists());
}

#[test]
fn dynamics_over_checkpoints_and_diff() {
    let dir = tempfile::tempdir().unwrap();
    let qa = synth(dir.path(), "4");
    let mut logs = Vec::new();
    for k in 0..3 {
        let out = dir.path().join(format!("s{k}.jsonl"));
        let o = cli(&["score", "--qa", p(&qa), "--scorer", "mock", "--checkpoint", &k.to_string(), "--out", p(&out)]);
        assert!(o.status.success());
        logs.push(out);
    }
    let dyn_a = dir.path().join("dyn.csv");
    let mut args = vec!["dynamics", "--out", p(&dyn_a), "--scores"];
    args.extend(logs.iter().map(|l| p(l)));
    let o = cli(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&dyn_a).unwrap();
    assert!(table.starts_with("qa_id,confidence,variability,category"));
    assert_eq!(table.lines().count(), 1 + jsonl(&qa).len());
    // Identical checkpoints: no variability.
    for line in table.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-12, "{line}");
    }

    let diff = dir.path().join("diff.csv");
    let o = cli(&["dynamics", "--diff", p(&dyn_a), p(&dyn_a), "--out", p(&diff)]);
    assert!(o.status.success());
    let medians = std::fs::read_to_string(dir.path().join("diff.csv.medians.csv")).unwrap();
    let row: Vec<&str> = medians.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "0.0");
    assert_eq!(row[5], "0.0");
}

#[test]
fn ingest_and_augment_write_normalized_files() {
    let dir = tempfile::tempdir().unwrap();
    let norm = dir.path().join("norm");
    let mut args = vec!["ingest".to_string(), "--out".into(), p(&norm).into()];
    args.extend(kb_args());
    let o = Command::new(BIN).args(&args).output().unwrap();
    assert!(o.status.success());
    assert_eq!(jsonl(&norm.join("triples.jsonl")).len(), 500);
    assert_eq!(jsonl(&norm.join("abstracts.jsonl")).len(), 134);
    assert!(norm.join("ingest.manifest.json").exists());

    let aug = dir.path().join("aug.jsonl");
    let mut args = vec!["augment".to_string(), "--out".into(), p(&aug).into()];
    args.extend(kb_args());
    let o = Command::new(BIN).args(&args).output().unwrap();
    assert!(o.status.success());
    assert!(jsonl(&aug).len() > 500);
    assert!(dir.path().join("aug.jsonl.manifest.json").exists());
}
