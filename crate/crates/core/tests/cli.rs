//! End-to-end runs of the command-line binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use rank_explain::cli::{load_dataset, render_svg_bars};
use rank_explain::eval::{fidelity, Dataset};
use rank_explain::explain::Explanation;
use rank_explain::features::SpaceKind;
use rank_explain::rankers::{Bm25Ranker, RankerHandle};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rank-explain")).args(args).env_remove("RANK_EXPLAIN_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn explain_json_matches_recomputed_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("e.json");
    let svg = dir.path().join("e.svg");
    let toy = data("toy.jsonl");
    let o = run(&[
        "explain", "--instances", toy.to_str().unwrap(), "--ranker", "bm25", "--space", "words",
        "--loss", "approx-ndcg", "--perturb", "group", "--k", "8", "--seed", "3",
        "--out-json", json.to_str().unwrap(), "--out-svg", svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e: Explanation = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(!e.is_empty() && e.len() <= 8);

    let Dataset::Text { vocab, stats, instances } = load_dataset(&toy).unwrap() else { panic!("text dataset") };
    let dataset = Dataset::Text { vocab, stats: stats.clone(), instances };
    let space = dataset.space(0, SpaceKind::Words).unwrap();
    let subject = dataset.subject(0);
    let ranker = RankerHandle::Bm25(Bm25Ranker::new(stats));
    let f = subject.original_scores(&ranker).unwrap();
    let features = subject.feature_matrix(&space).unwrap();
    assert_eq!(e.training_fidelity, fidelity(&f, &e, &features).unwrap());

    let written = std::fs::read_to_string(&svg).unwrap();
    roxmltree::Document::parse(&written).unwrap();
    assert_eq!(written, render_svg_bars(&e));
}

#[test]
fn compare_is_deterministic_and_tabulated() {
    let dir = tempfile::tempdir().unwrap();
    let toy = data("toy.jsonl");
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let p = dir.path().join(name);
        let o = run(&["compare", "--instances", toy.to_str().unwrap(), "--ranker", "bm25", "--seed", "5",
            "--qid", "coffee", "--out-json", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let table = stdout(&o);
        let lines: Vec<&str> = table.lines().collect();
        let header: Vec<&str> = lines[0].split('|').map(str::trim).collect();
        assert_eq!(header, ["Ranker", "System", "Fidelity", "Explain-NDCG", "Intly"]);
        assert_eq!(lines.len(), 2 + 5);
        outputs.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_falls_back_to_environment() {
    let toy = data("toy.jsonl");
    let args = ["explain", "--instances", toy.to_str().unwrap(), "--ranker", "bm25"];
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_rank-explain")).args(args).env("RANK_EXPLAIN_SEED", seed).output().unwrap()
    };
    let explicit = run(&[&args[..], &["--seed", "9"]].concat());
    assert_eq!(stdout(&with_env("9")), stdout(&explicit));
}

#[test]
fn tabular_eval_and_prune() {
    let letor = data("toy.letor");
    let model = format!("linear:{}", data("toy-linear.json").display());
    let o = run(&["eval", "--instances", letor.to_str().unwrap(), "--ranker", &model, "--systems", "rank-lime,random"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 4, "{table}");
    assert!(table.contains("rank-lime") && table.contains("random"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = run(&["prune", "--instances", letor.to_str().unwrap(), "--ranker", &model, "--mode", "independent",
        "--out-json", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[0]["features"].as_array().is_some());
}

#[test]
fn external_ranker_through_cli() {
    let toy = data("toy.jsonl");
    let cmd = format!("external:{}", env!("CARGO_BIN_EXE_echo-ranker"));
    let o = run(&["explain", "--instances", toy.to_str().unwrap(), "--ranker", &cmd, "--epochs", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = format!("external:{} --bad-count", env!("CARGO_BIN_EXE_echo-ranker"));
    let o = run(&["explain", "--instances", toy.to_str().unwrap(), "--ranker", &bad]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors() {
    let o = run(&["explain", "--ranker", "bm25"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--instances"));
    assert_eq!(run(&["explain", "--instances", "/no/such/file", "--ranker", "bm25"]).status.code(), Some(1));
    assert_eq!(run(&["explain", "--bogus"]).status.code(), Some(1));
    let letor = data("toy.letor");
    assert_eq!(run(&["explain", "--instances", letor.to_str().unwrap(), "--ranker", "bm25"]).status.code(), Some(1));
}
