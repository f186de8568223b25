use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mnn::data::{load_csv, split_standardize};
use mnn::model_file::load_model;
use mnn::{evaluate, predict_class, Mask, NetworkShape};

fn mnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_moons(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("moons.csv");
    let out = mnn(&["gen", "--dataset", "moons", "--n", &n.to_string(), "--noise", "0.1", "--seed", "7", "--out", p(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn gen_writes_header_plus_one_line_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_moons(dir.path(), 1000);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(text.lines().next(), Some("f0,f1,label"));
    assert_eq!(load_csv(&path).unwrap().class_counts(), vec![500, 500]);
}

#[test]
fn gen_covers_every_dataset() {
    let dir = tempfile::tempdir().unwrap();
    for (name, n, rows) in [
        ("circles", "100", 100),
        ("spirals", "100", 100),
        ("single-blobs", "99", 99),
        ("double-blobs", "99", 99),
        ("iris", "0", 150),
    ] {
        let path = dir.path().join(format!("{name}.csv"));
        let out = mnn(&["gen", "--dataset", name, "--n", n, "--out", p(&path)]);
        assert_eq!(code(&out), 0, "{name}");
        assert_eq!(load_csv(&path).unwrap().len(), rows, "{name}");
    }
}

#[test]
fn train_then_eval_reproduces_the_last_metrics_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_moons(dir.path(), 200);
    let model = dir.path().join("model.json");
    let metrics = dir.path().join("metrics.csv");
    let out = mnn(&[
        "train", "--data", p(&data), "--hidden", "5", "--ticks", "3", "--epochs", "40", "--lr", "0.01",
        "--seed", "1", "--out", p(&model), "--metrics", p(&metrics),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let rows = std::fs::read_to_string(&metrics).unwrap();
    assert_eq!(rows.lines().count(), 42);
    let last: f64 = rows.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let out = mnn(&["eval", "--model", p(&model), "--data", p(&data), "--split", "train"]);
    assert_eq!(code(&out), 0);
    let printed = stdout(&out);
    assert_eq!(printed.trim().split('.').nth(1).unwrap().len(), 6, "six decimals: {printed}");

    // The printed value is rounded; recompute at full precision as well.
    let saved = load_model(&model).unwrap();
    let (train_set, test_set, _) = split_standardize(&load_csv(&data).unwrap(), 0.7, 1).unwrap();
    let acc = evaluate(&saved.model, &train_set).unwrap();
    assert!((acc - last).abs() <= 1e-9);
    assert!((printed.trim().parse::<f64>().unwrap() - last).abs() <= 5e-7);

    let out = mnn(&["eval", "--model", p(&model), "--data", p(&data)]);
    let test_acc: f64 = stdout(&out).trim().parse().unwrap();
    assert!((test_acc - evaluate(&saved.model, &test_set).unwrap()).abs() <= 5e-7);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_moons(dir.path(), 60);
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"epochs": 3, "learning_rate": 0.05}"#).unwrap();
    let model = dir.path().join("m.json");
    let metrics = dir.path().join("m.csv");
    let base = ["train", "--data", p(&data), "--config", p(&config), "--out", p(&model), "--metrics", p(&metrics)];

    assert_eq!(code(&mnn(&base)), 0);
    assert_eq!(std::fs::read_to_string(&metrics).unwrap().lines().count(), 5);

    let mut with_flag = base.to_vec();
    with_flag.extend(["--epochs", "6"]);
    assert_eq!(code(&mnn(&with_flag)), 0);
    assert_eq!(std::fs::read_to_string(&metrics).unwrap().lines().count(), 8);

    std::fs::write(&config, r#"{"epochs": 3, "learning_rat": 0.05}"#).unwrap();
    assert_eq!(code(&mnn(&base)), 1);
}

#[test]
fn custom_mask_is_used_and_saved() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_moons(dir.path(), 60);
    let shape = NetworkShape::new(3, 2, 2, 3).unwrap();
    let mut mask = Mask::empty(7);
    for (i, j) in [(0, 3), (1, 3), (2, 4), (3, 5), (4, 6), (2, 6)] {
        mask.set(i, j, true);
    }
    mask.validate(&shape).unwrap();
    let mask_path = dir.path().join("mask.csv");
    std::fs::write(&mask_path, mask.to_csv_string()).unwrap();
    let model = dir.path().join("m.json");
    let out = mnn(&[
        "train", "--data", p(&data), "--hidden", "2", "--mask", p(&mask_path), "--epochs", "2", "--out", p(&model),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(load_model(&model).unwrap().model.mask(), &mask);

    let out = mnn(&["train", "--data", p(&data), "--hidden", "3", "--mask", p(&mask_path), "--out", p(&model)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn plot_outputs_agree_with_each_other_and_with_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_moons(dir.path(), 200);
    let model = dir.path().join("model.json");
    assert_eq!(
        code(&mnn(&["train", "--data", p(&data), "--epochs", "30", "--lr", "0.01", "--out", p(&model)])),
        0
    );
    let pgm = dir.path().join("r.pgm");
    let csv = dir.path().join("r.csv");
    let out = mnn(&[
        "plot", "--model", p(&model), "--data", p(&data), "--resolution", "40", "--pgm", p(&pgm), "--csv", p(&csv),
    ]);
    assert_eq!(code(&out), 0);

    let bytes = std::fs::read(&pgm).unwrap();
    let header = b"P5\n40 40\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    let pixels = &bytes[header.len()..];
    let saved = load_model(&model).unwrap();
    let scaler = saved.scaler.unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut n = 0;
    for (line, &pixel) in text.lines().skip(1).zip(pixels) {
        let f: Vec<&str> = line.split(',').collect();
        let (x, y, label): (f64, f64, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        assert_eq!(usize::from(pixel), label * 255);
        assert_eq!(predict_class(&saved.model, &scaler.transform_point(&[x, y])).unwrap(), label);
        n += 1;
    }
    assert_eq!(n, 1600);
    assert_eq!(pixels.len(), 1600);
}

#[test]
fn plot_rejects_datasets_without_two_features() {
    let dir = tempfile::tempdir().unwrap();
    let iris = dir.path().join("iris.csv");
    assert_eq!(code(&mnn(&["gen", "--dataset", "iris", "--out", p(&iris)])), 0);
    let model = dir.path().join("m.json");
    assert_eq!(code(&mnn(&["train", "--data", p(&iris), "--epochs", "1", "--out", p(&model)])), 0);
    let out = mnn(&["plot", "--model", p(&model), "--data", p(&iris), "--pgm", p(&dir.path().join("x.pgm"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 features"));
}

#[test]
fn gradcheck_exit_code_follows_the_verdict() {
    let out = mnn(&["gradcheck", "--n", "8", "--ticks", "4", "--activation", "tanh", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("PASS"));

    let out = mnn(&["gradcheck", "--seed", "3", "--tol", "1e-15", "--json"]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        &["frobnicate"][..],
        &[][..],
        &["gen", "--dataset", "moons"][..],
        &["gen", "--dataset", "squares", "--out", "x.csv"][..],
        &["gradcheck", "--activation", "softplus"][..],
        &["eval", "--model", "m.json", "--data", "d.csv", "--split", "validation"][..],
        &["plot", "--model", "m.json", "--data", "d.csv"][..],
    ] {
        let out = mnn(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(code(&mnn(&["--help"])), 0);
}

#[test]
fn runtime_failures_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = mnn(&["train", "--data", p(&missing), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let out = mnn(&["gen", "--dataset", "single-blobs", "--n", "1000", "--out", p(&dir.path().join("b.csv"))]);
    assert_eq!(code(&out), 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1.0,2.0,0\n1.0,notanumber,1\n").unwrap();
    let out = mnn(&["train", "--data", p(&bad), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}
