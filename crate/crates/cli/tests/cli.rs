use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn signpose(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_signpose")).args(args).output().expect("spawn signpose");
    assert!(
        out.status.success(),
        "signpose {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SYNTH: &str = r#"
layout = "openpose"
signers = 6
classes = 3
sequences_per_class = 12
seed = 3
"#;

const EXPERIMENT: &str = r#"
corpus = "corpus"
split = "split.json"
checkpoint = "model.ck"
trace = "trace.jsonl"

[pipeline]
impute = true
normalize = true

[model]
d_embed = 16
block_widths = [16, 16, 16]
layers = 1
heads = 2

[run]
seed = 1
max_epochs = 3
optimizer = { lr = 0.001 }
"#;

#[test]
fn end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus");
    fs::write(d.join("synth.toml"), SYNTH).unwrap();
    fs::write(d.join("experiment.toml"), EXPERIMENT).unwrap();

    let out = signpose(&["synth", "--out", path(&corpus), "--config", path(&d.join("synth.toml"))]);
    assert!(stdout(&out).contains("left_hand"));
    assert!(corpus.join("annotations.tsv").exists());

    signpose(&["split", "--corpus", path(&corpus), "--out", path(&d.join("split.json")), "--seed", "0"]);

    let exp = d.join("experiment.toml");
    let out = signpose(&["train", path(&exp)]);
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    for l in &lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["validation_accuracy"].is_number());
    }
    assert_eq!(fs::read_to_string(d.join("trace.jsonl")).unwrap().lines().count(), 3);
    assert!(d.join("model.ck").exists());

    let out = signpose(&["eval", path(&exp), "--part", "validation"]);
    assert!(stdout(&out).starts_with("validation accuracy"));

    let source = d.join("source.ck");
    fs::copy(d.join("model.ck"), &source).unwrap();
    let out = signpose(&["transfer", path(&exp), "--source", path(&source), "--schedule", "classifier_then_all"]);
    let stages: Vec<String> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["stage"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(stages.first().map(String::as_str), Some("classifier_only"));
    assert_eq!(stages.last().map(String::as_str), Some("all"));

    let plot = d.join("hist.tsv");
    let out = signpose(&["hist", "--corpus", path(&corpus), "--bins", "10", "--plot", path(&plot)]);
    assert_eq!(stdout(&out).lines().count(), 12);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("series\tx\ty\n"));

    signpose(&["stats", "--corpus", path(&corpus), "--plot", path(&d.join("stats.tsv"))]);
    let out = signpose(&["bench", "--corpus", path(&corpus), "--limit", "5"]);
    assert!(stdout(&out).contains("aggregate"));

    let out = signpose(&["ablate", path(&exp)]);
    assert_eq!(stdout(&out).lines().count(), 4);

    let clip = fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "kp"))
        .unwrap();
    let processed = d.join("processed.kp");
    signpose(&["postprocess", "--in", path(&clip), "--out", path(&processed)]);
    assert!(processed.exists());
}

#[test]
fn layout_table() {
    let out = signpose(&["layout", "mediapipe"]);
    assert!(stdout(&out).lines().count() > 67);
}

#[test]
fn bad_schedule_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_signpose"))
        .args(["transfer", "missing.toml", "--source", "x.ck", "--schedule", "sideways"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
