use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kgnn::harness::RunResult;
use kgnn::tu::load_tu_dataset;
use kgnn::Dataset;

const SMALL: &[&str] = &[
    "--dataset",
    "toy",
    "--folds",
    "4",
    "--epochs",
    "5",
    "--pretrain-epochs",
    "3",
    "--batch-size",
    "4",
    "--hidden-graphs",
    "2",
    "--hidden-nodes",
    "3",
    "--hidden-dim",
    "4",
];

fn kgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgnn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = kgnn(args);
    assert!(
        out.status.success(),
        "kgnn {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn with_small<'a>(head: &[&'a str], out: &'a Path) -> Vec<&'a str> {
    let mut args = head.to_vec();
    args.extend_from_slice(SMALL);
    args.extend(["--out", out.to_str().unwrap()]);
    args
}

#[test]
fn train_writes_reports_that_report_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&with_small(&["train"], dir.path()));
    assert!(stdout.contains("toy Supervised"), "{stdout}");

    let result: RunResult = serde_json::from_str(&fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result.folds.len(), 4);
    result.check_consistency().unwrap();
    let csv = fs::read_to_string(dir.path().join("folds.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("fold,accuracy,epochs_to_best,seconds"));
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("encoders.json").exists());

    let input = dir.path().join("result.json");
    let copy = dir.path().join("again/folds.csv");
    let report = ok(&["report", "--input", input.to_str().unwrap(), "--out", copy.to_str().unwrap()]);
    assert!(report.contains(&format!("mean {:.6}", result.mean_accuracy)), "{report}");
    assert_eq!(fs::read_to_string(copy).unwrap().lines().count(), 5);
}

#[test]
fn pretrain_then_adapt() {
    let dir = tempfile::tempdir().unwrap();
    let pre_dir = dir.path().join("pre");
    ok(&with_small(&["pretrain", "--tau", "0.5"], &pre_dir));
    let pretrained = pre_dir.join("pretrained.json");
    assert!(pretrained.exists());

    for (cmd, label) in [("probe", "Probe"), ("finetune", "Finetune")] {
        let out = dir.path().join(cmd);
        let stdout = ok(&with_small(&[cmd, "--pretrained", pretrained.to_str().unwrap()], &out));
        assert!(stdout.contains(label), "{stdout}");
        assert!(out.join("result.json").exists());
    }
    let best = dir.path().join("best");
    ok(&with_small(
        &["finetune", "--best-of-both", "--pretrained", pretrained.to_str().unwrap()],
        &best,
    ));

    let hidden = dir.path().join("hidden");
    ok(&["export-hidden", "--params", pretrained.to_str().unwrap(), "--fold", "1", "--out", hidden.to_str().unwrap()]);
    for m in 0..2 {
        assert!(hidden.join(format!("hidden_{m}.json")).exists());
        let dot = fs::read_to_string(hidden.join(format!("hidden_{m}.dot"))).unwrap();
        assert!(dot.starts_with("graph"), "{dot}");
    }
    let missing = kgnn(&["export-hidden", "--params", pretrained.to_str().unwrap(), "--fold", "9"]);
    assert!(!missing.status.success());
}

#[test]
fn adapt_without_pretrained_weights_says_what_to_do() {
    let out = kgnn(&["probe", "--dataset", "toy"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kgnn pretrain"));
}

#[test]
fn identity_augmentation_round_trips_through_tu_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["augment", "--dataset", "toy", "--augmenter", "identity", "--out", dir.path().to_str().unwrap()]);
    let toy = Dataset::toy();
    let back = load_tu_dataset(dir.path(), &toy.name).unwrap();
    assert_eq!(back.len(), toy.len());
    for (a, b) in toy.graphs.iter().zip(&back.graphs) {
        assert_eq!(a.adjacency(), b.adjacency());
    }
    assert!(dir.path().join(format!("{}_manifest.json", toy.name)).exists());
}

#[test]
fn ablation_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with_small(&["ablate", "--param", "num-hidden", "--values", "1,2"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter,value,mean,std");
    assert_eq!(lines.len(), 3);
}

#[test]
fn invalid_settings_are_rejected() {
    for args in [
        &["train", "--dataset", "toy", "--walk-len", "4"][..],
        &["train", "--dataset", "toy", "--epochs", "0"],
        &["ablate", "--dataset", "toy", "--param", "depth", "--values", "1"],
        &["train", "--dataset", "nope", "--data-dir", "/nonexistent"],
    ] {
        assert!(!kgnn(args).status.success(), "{args:?} should fail");
    }
}
