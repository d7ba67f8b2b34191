use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use copula_bayes::Classifier;
use copula_bayes_cli::io::{read_dataset, read_json, read_predictions};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copula-bayes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small preset-1 dataset with train/test siblings.
fn small_dataset(dir: &Path, seed: u64) -> PathBuf {
    let ds = dir.join("ds.csv");
    ok(&[
        "gen", "--preset", "1", "--dim", "6", "--n", "600", "--seed", &seed.to_string(),
        "--split", "0.7", "-o", p(&ds),
    ]);
    ds
}

#[test]
fn gen_writes_dataset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path(), 42);
    let data = read_dataset(&ds, true).unwrap();
    assert_eq!(data.len(), 600);
    assert_eq!(data.dim(), 6);
    let header = std::fs::read_to_string(&ds).unwrap();
    assert!(header.starts_with("label,f1,f2,f3,f4,f5,f6\n"));
    assert_eq!(read_dataset(&dir.path().join("ds-train.csv"), true).unwrap().len(), 420);
    assert_eq!(read_dataset(&dir.path().join("ds-test.csv"), true).unwrap().len(), 180);
    let manifest: serde_json::Value = read_json(&dir.path().join("ds.csv.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["seed"], 42);
    assert!(manifest["config"]["split_seed"].is_u64());
    assert_eq!(manifest["config"]["dataset_spec"]["dim"], 6);
}

#[test]
fn gen_is_byte_identical_on_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (da, db) = (small_dataset(a.path(), 7), small_dataset(b.path(), 7));
    assert_eq!(std::fs::read(da).unwrap(), std::fs::read(db).unwrap());
}

#[test]
fn gen_rejects_unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "--preset", "9", "-o", p(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}

#[test]
fn train_predict_eval_compose() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 3);
    let train = dir.path().join("ds-train.csv");
    let test = dir.path().join("ds-test.csv");
    let model = dir.path().join("m.json");
    let summary = ok(&[
        "train", "--copula", "gaussian", "--marginals", "empirical", "--estimation", "eml",
        p(&train), "-o", p(&model),
    ]);
    assert!(summary.contains("class 0: loglik"));
    assert!(summary.contains("repaired false"));

    let preds = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&model), p(&test), "-o", p(&preds)]);
    let predicted = read_predictions(&preds).unwrap();
    let truth = read_dataset(&test, true).unwrap().labels;
    let matching = predicted.iter().zip(&truth).filter(|(a, b)| a == b).count();
    let expected = format!("accuracy: {:.2}", 100.0 * matching as f64 / truth.len() as f64);

    let report = dir.path().join("eval.json");
    let printed = ok(&["eval", "--model", p(&model), p(&test), "-o", p(&report)]);
    assert!(printed.starts_with(&expected), "{printed}");
    let json: serde_json::Value = read_json(&report).unwrap();
    assert_eq!(json["n"], 180);
    assert!(dir.path().join("eval.json.manifest.json").exists());
}

#[test]
fn model_file_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 4);
    let train = dir.path().join("ds-train.csv");
    let test = dir.path().join("ds-test.csv");
    let model = dir.path().join("m.json");
    ok(&["train", p(&train), "-o", p(&model)]);
    let classifier: Classifier = read_json(&model).unwrap();
    let data = read_dataset(&test, true).unwrap();
    let in_memory = classifier.classify_batch(&data.features).unwrap();
    let preds = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&model), p(&test), "-o", p(&preds)]);
    assert_eq!(read_predictions(&preds).unwrap(), in_memory);
}

#[test]
fn t_copula_and_normal_baseline_models() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 5);
    let train = dir.path().join("ds-train.csv");
    let t_model = dir.path().join("t.json");
    let out = ok(&["train", "--copula", "t", "--estimation", "cml", p(&train), "-o", p(&t_model)]);
    assert!(out.contains(", nu "), "{out}");
    let json: serde_json::Value = read_json(&t_model).unwrap();
    assert!(json["classes"][0]["copula"]["nu"].as_f64().unwrap() > 2.0);

    let n_model = dir.path().join("n.json");
    ok(&["train", "--baseline", "normal", p(&train), "-o", p(&n_model)]);
    let classifier: Classifier = read_json(&n_model).unwrap();
    assert!(matches!(classifier, Classifier::Normal { .. }));
}

#[test]
fn t_copula_with_eml_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 6);
    let out = run(&[
        "train", "--copula", "t", "--estimation", "eml",
        p(&dir.path().join("ds-train.csv")), "-o", p(&dir.path().join("m.json")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("CML"));
}

#[test]
fn perfect_model_scores_100() {
    // two well separated clusters that the normal discriminant gets right
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("easy.csv");
    let mut csv = String::from("label,f1,f2\n");
    for i in 0..40 {
        let (l, c) = if i % 2 == 0 { (0, -50.0) } else { (1, 50.0) };
        let a = (i as f64 * 0.37).sin();
        let b = (i as f64 * 0.71).cos();
        csv += &format!("{l},{},{}\n", c + a, c + b);
    }
    std::fs::write(&data, csv).unwrap();
    let model = dir.path().join("m.json");
    ok(&["train", "--baseline", "normal", p(&data), "-o", p(&model)]);
    let out = ok(&["eval", "--model", p(&model), p(&data), "-o", p(&dir.path().join("r.json"))]);
    assert!(out.starts_with("accuracy: 100.00"), "{out}");
}

#[test]
fn parse_errors_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "label,f1,f2\n0,1.0,2.0\n1,oops,3.0\n").unwrap();
    let out = run(&["train", p(&data), "-o", p(&dir.path().join("m.json"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
}

#[test]
fn dimension_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 8);
    let model = dir.path().join("m.json");
    ok(&["train", "--baseline", "normal", p(&dir.path().join("ds-train.csv")), "-o", p(&model)]);
    let other = dir.path().join("other.csv");
    ok(&["gen", "--preset", "2", "--dim", "4", "--n", "100", "-o", p(&other)]);
    let out = run(&["predict", "--model", p(&model), p(&other), "-o", p(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));
}

#[test]
fn bench_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |o: &Path| {
        vec![
            "bench".to_string(), "--presets".into(), "1,3".into(), "--dims".into(), "3,5".into(),
            "--reps".into(), "2".into(), "--n".into(), "300".into(), "--seed".into(), "11".into(),
            "-o".into(), p(o).to_string(),
        ]
    };
    let summary = ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "preset,dim,rep,method,accuracy");
    // 2 presets x 2 dims x 2 reps x 2 methods
    assert_eq!(lines.len(), 1 + 16);
    assert!(lines[1].starts_with("1,3,0,copula,"));
    assert!(lines[2].starts_with("1,3,0,normal,"));
    assert_eq!(summary.lines().count(), 1 + 8);
}
