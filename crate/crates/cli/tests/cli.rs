use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mwp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_equation_prints_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = mwp(dir.path(), &["solve", "--equation", "x = (7 - 3) / 8"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0.5");
}

#[test]
fn malformed_equation_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mwp(dir.path(), &["solve", "--equation", "x = 3 +"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "train.nonsense = 1\n").unwrap();
    let out = mwp(dir.path(), &["--config", "bad.toml", "train"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mwp(dir.path(), &["split", "--in", "nope.jsonl", "--out", "parts"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = mwp(dir.path(), &["datagen", "-n", "3", "--out", "blocker/all.jsonl"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn end_to_end_with_prediction_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(mwp(d, &["datagen", "-n", "40", "--seed", "4", "--out", "all.jsonl"]).status.success());
    assert!(mwp(d, &["split", "--in", "all.jsonl", "--seed", "4", "--out", "parts"]).status.success());
    let test = fs::read_to_string(d.join("parts/test.jsonl")).unwrap();
    assert_eq!(test.lines().count(), 4);

    // echo the gold equations back: every record is correct with BLEU 100
    let preds: String = test
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            format!("{}\n", serde_json::json!({"id": v["id"], "equation": v["equation"]}))
        })
        .collect();
    fs::write(d.join("preds.jsonl"), preds).unwrap();
    let out = mwp(d, &["eval", "--in", "parts", "--predictions", "preds.jsonl", "--out", "report.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["solution_accuracy"], 1.0);
    assert_eq!(report["corpus_bleu"], 100.0);
}

#[test]
fn train_then_solve_a_problem() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "seed = 1\n[model]\nd_model = 16\nd_ff = 32\nn_heads = 2\nn_enc_layers = 1\nn_dec_layers = 1\n\
         [train]\nepochs = 2\n",
    )
    .unwrap();
    assert!(mwp(d, &["--config", "run.toml", "datagen", "-n", "30"]).status.success());
    assert!(mwp(d, &["--config", "run.toml", "split"]).status.success());
    let out = mwp(d, &["--config", "run.toml", "train"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = mwp(d, &["--config", "run.toml", "solve", "--problem", "রহিমের ৩ টি আম ছিল।"]);
    // an undertrained model may emit an unsolvable equation; either way the
    // command must fail cleanly or print two lines
    match out.status.code() {
        Some(0) => assert_eq!(stdout(&out).lines().count(), 2),
        Some(code) => assert!((2..=4).contains(&code)),
        None => panic!("killed"),
    }
}
