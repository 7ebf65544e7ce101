use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use campaign_detect::cli::manifest::{manifest_path, RunManifest};
use campaign_detect::cli::ARTIFACT_ROOT_ENV;

fn bin(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_campaign-detect"))
        .args(args)
        .env(ARTIFACT_ROOT_ENV, root)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

const SMALL_RUN: [&str; 10] = ["--grid", "reduced", "--runs", "2", "--dim", "64", "--seed", "3", "--corpus", "corpus.jsonl"];

#[test]
fn run_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(dir.path(), &["run", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("--granularity") && text.contains("--aggregate"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(dir.path(), &["run", "--corpus", "c.jsonl", "--out", "r.json", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_corpus_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(dir.path(), &["run", "--corpus", "absent.jsonl", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().find(|l| l.starts_with("error[")).unwrap();
    assert!(line.starts_with("error[io]:"), "{line}");
    assert!(line.contains("absent.jsonl"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn run_writes_report_and_manifest_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&bin(d, &["gen", "--out", "corpus.jsonl", "--gold", "gold.csv", "--n-docs", "400", "--seed", "11"]));
        let mut args = vec!["run", "--out", "out/report.json"];
        args.extend(SMALL_RUN);
        ok(&bin(d, &args));
    }
    let ra = fs::read(a.path().join("out/report.json")).unwrap();
    let rb = fs::read(b.path().join("out/report.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(
        fs::read(a.path().join("corpus.jsonl")).unwrap(),
        fs::read(b.path().join("corpus.jsonl")).unwrap()
    );

    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert_eq!(report["n_experiments"], 27);

    let ma = RunManifest::read(&manifest_path(&a.path().join("out/report.json"))).unwrap();
    let mb = RunManifest::read(&manifest_path(&b.path().join("out/report.json"))).unwrap();
    ma.verify().unwrap();
    assert_eq!(ma.command, "run");
    assert_eq!(ma.seeds["pipeline"], 3);
    assert_eq!(ma.outputs.len(), 1);
    assert_eq!(ma.outputs[0].sha256, mb.outputs[0].sha256);
    assert_eq!(ma.inputs[0].sha256, mb.inputs[0].sha256);
    assert!(ma.finished_unix >= ma.started_unix);
}

#[test]
fn staged_commands_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 8] = [
        &["gen", "--out", "corpus.jsonl", "--gold", "gold.csv", "--n-docs", "600", "--spans", "spans.jsonl"],
        &["segment", "--corpus", "corpus.jsonl", "--granularity", "sentence", "--out", "parts.jsonl"],
        &["embed", "--parts", "parts.jsonl", "--dim", "128", "--out", "emb.jsonl"],
        &["cluster", "--embeddings", "emb.jsonl", "--grid", "reduced", "--out", "clusters"],
        &[
            "featurize", "--clusters", "clusters", "--embeddings", "emb.jsonl", "--parts", "parts.jsonl", "--out",
            "features.csv", "--corpus", "corpus.jsonl", "--train-features", "train.csv", "--labels", "labels.csv",
        ],
        &["train", "--features", "train.csv", "--labels", "labels.csv", "--run", "3", "--out", "model.json"],
        &[
            "predict", "--model", "model.json", "--features", "features.csv", "--clusters", "clusters", "--parts",
            "parts.jsonl", "--corpus", "corpus.jsonl", "--out", "predictions.json",
        ],
        &["evaluate", "--predictions", "predictions.json", "--gold", "gold.csv", "--out", "metrics.json"],
    ];
    for s in steps {
        let o = bin(d, s);
        ok(&o);
    }
    for out in ["corpus.jsonl", "parts.jsonl", "emb.jsonl", "clusters", "features.csv", "model.json", "predictions.json", "metrics.json"] {
        let m = RunManifest::read(&manifest_path(&d.join(out))).unwrap();
        m.verify().unwrap();
    }
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("metrics.json")).unwrap()).unwrap();
    let f1 = metrics["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    let gold = fs::read_to_string(d.join("gold.csv")).unwrap();
    let tested = metrics["tp"].as_u64().unwrap() + metrics["fp"].as_u64().unwrap() + metrics["fn"].as_u64().unwrap() + metrics["tn"].as_u64().unwrap();
    assert_eq!(tested as usize, gold.lines().count() - 1);
}

#[test]
fn tampered_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&bin(d, &["gen", "--out", "corpus.jsonl", "--gold", "gold.csv", "--n-docs", "100"]));
    ok(&bin(d, &["segment", "--corpus", "corpus.jsonl", "--out", "parts.jsonl"]));
    let mut text = fs::read_to_string(d.join("parts.jsonl")).unwrap();
    text.push('\n');
    fs::write(d.join("parts.jsonl"), text).unwrap();
    let o = bin(d, &["embed", "--parts", "parts.jsonl", "--out", "emb.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[manifest]:"));
}

#[test]
fn stage_failure_is_one_categorized_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.jsonl"), "{\"doc_id\": \"a\", \"media\": \"Fax\", \"text\": \"x\", \"label\": true}\n").unwrap();
    let o = bin(d, &["segment", "--corpus", "bad.jsonl", "--out", "parts.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[parse]:") && err.contains("bad.jsonl:1"));
}
