use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relembed::synthetic::{planted_clusters, PlantedConfig};
use relembed::Split;

fn relembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relembed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Raw split files of the planted knowledge base.
fn raw_splits(dir: &Path) -> [PathBuf; 3] {
    let store = planted_clusters(&PlantedConfig::default()).unwrap();
    Split::ALL.map(|split| {
        let path = dir.join(format!("raw-{}.txt", split.name()));
        store.write_split(split, &path).unwrap();
        path
    })
}

fn prepared(dir: &Path) -> PathBuf {
    let [train, valid, test] = raw_splits(dir);
    let out = dir.join("data");
    let o = relembed(&["prepare", "--train", s(&train), "--valid", s(&valid), "--test", s(&test), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn trained(dir: &Path, extra: &[&str]) -> PathBuf {
    let data = prepared(dir);
    let out = dir.join("run");
    let mut args = vec!["train", "--data", s(&data), "--out", s(&out), "--dim", "10", "--epochs", "30", "--seed", "5"];
    args.extend_from_slice(extra);
    let o = relembed(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn prepare_writes_dataset_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = prepared(dir.path());
    for f in ["train.tsv", "valid.tsv", "test.tsv", "entities.tsv", "relations.tsv", "stats.txt", "config.resolved"] {
        assert!(data.join(f).is_file(), "{f} missing");
    }
    let o = relembed(&["stats", "--data", s(&data)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("1250"), "{text}");
    assert!(text.contains("category\t1-to-1"), "{text}");
}

#[test]
fn prepare_filters_rare_relations() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str, text: &str| {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        path
    };
    let train = p("train.txt", "a\tbig\tb\nb\tbig\tc\nc\tbig\ta\nd\tsmall\te\n");
    let valid = p("valid.txt", "d\tsmall\ta\n");
    let test = p("test.txt", "a\tbig\tc\n");
    let out = dir.path().join("out");
    let o = relembed(&["prepare", "--train", s(&train), "--valid", s(&valid), "--test", s(&test), "--min-relation-count", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("relations.tsv")).unwrap(), "0\tbig\n");
    assert_eq!(fs::read_to_string(out.join("entities.tsv")).unwrap(), "0\ta\n1\tb\n2\tc\n");
    assert_eq!(fs::read_to_string(out.join("valid.tsv")).unwrap(), "");
}

#[test]
fn prepare_missing_file_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.txt");
    let o = relembed(&["prepare", "--train", s(&missing), "--valid", s(&missing), "--test", s(&missing), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn malformed_line_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "a\tr\tb\nonly two\tfields\n").unwrap();
    let out = dir.path().join("out");
    let o = relembed(&["prepare", "--train", s(&bad), "--valid", s(&bad), "--test", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains(":2"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn train_eval_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let run = trained(dir.path(), &["--model", "distmult"]);
    for f in ["model.ckpt", "loss_trace.tsv", "config.resolved"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let trace = fs::read_to_string(run.join("loss_trace.tsv")).unwrap();
    assert_eq!(trace.lines().count(), 31);

    // replaying the echoed configuration reproduces the checkpoint bit for bit
    let replay = dir.path().join("replay");
    let o = relembed(&["train", "--config", s(&run.join("config.resolved")), "--out", s(&replay)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(run.join("model.ckpt")).unwrap(), fs::read(replay.join("model.ckpt")).unwrap());

    let data = dir.path().join("data");
    let ckpt = run.join("model.ckpt");
    let eval_out = dir.path().join("eval");
    let o = relembed(&[
        "eval", "--data", s(&data), "--checkpoint", s(&ckpt), "--metrics", "mrr,hits@1,hits@10,map",
        "--by-category", "--out", s(&eval_out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for needle in ["MRR", "HITS@1", "HITS@10", "MAP", "1-to-1", "n-to-n"] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    let jsonl = fs::read_to_string(eval_out.join("eval.jsonl")).unwrap();
    for line in jsonl.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert!(eval_out.join("config.resolved").is_file());
}

#[test]
fn eval_rejects_checkpoint_for_other_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let run = trained(dir.path(), &[]);
    let other = dir.path().join("other.txt");
    fs::write(&other, "x\tr0\ty\n").unwrap();
    let o = relembed(&[
        "eval", "--train", s(&other), "--valid", s(&other), "--test", s(&other), "--checkpoint",
        s(&run.join("model.ckpt")),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn nn_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let run = trained(dir.path(), &["--model", "transe"]);
    let data = dir.path().join("data");
    let ckpt = run.join("model.ckpt");

    let o = relembed(&["nn", "--data", s(&data), "--checkpoint", s(&ckpt), "--relation", "r0", "--k", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<f64> = stdout(&o).lines().map(|l| l.rsplit('\t').next().unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0] <= w[1]));

    let o = relembed(&["nn", "--data", s(&data), "--checkpoint", s(&ckpt), "--relation", "r9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("close matches: r"), "{}", stderr(&o));

    let o = relembed(&["nn", "--data", s(&data), "--checkpoint", s(&ckpt), "--relation", "r0", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("relations.tsv");
    let o = relembed(&["export", "--data", s(&data), "--checkpoint", s(&ckpt), "--what", "relations", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = relembed::analysis::read_exported(&out).unwrap();
    assert_eq!(rows.len(), 5);
}

#[test]
fn usage_errors() {
    assert_eq!(relembed(&[]).status.code(), Some(2));
    assert_eq!(relembed(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(relembed(&["train", "--model", "nope", "--out", "x", "--data", "y"]).status.code(), Some(2));
    assert_eq!(relembed(&["eval", "--raw", "--filtered"]).status.code(), Some(2));
    assert!(relembed(&["--help"]).status.success());
}

#[test]
fn tanh_suffix_is_echoed_as_activation() {
    let dir = tempfile::tempdir().unwrap();
    let run = trained(dir.path(), &["--model", "distmult-tanh"]);
    let echo = fs::read_to_string(run.join("config.resolved")).unwrap();
    assert!(echo.contains("activation = tanh"), "{echo}");
    assert!(echo.contains("model = distmult\n"), "{echo}");
}
