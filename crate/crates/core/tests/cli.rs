//! End-to-end runs of the command-line front end through `cli::run`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use proxsplit::cli::{read_model_weights, run};
use proxsplit::synthetic::{generate, SyntheticSpec};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn proxsplit(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("proxsplit").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

/// Binary problem with labels in {-1, +1} written as LIBSVM text.
fn write_binary(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let spec = SyntheticSpec { n_samples: 60, n_features: 8, support: 3, seed, ..SyntheticSpec::default() };
    let (data, _) = generate(&spec).unwrap();
    let dense = data.x().to_dense();
    let mut text = String::new();
    for (row, y) in dense.iter().zip(data.y()) {
        write!(text, "{y}").unwrap();
        for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            write!(text, " {}:{v}", j + 1).unwrap();
        }
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn value_after<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)).map(str::trim)
}

#[test]
fn prox_eval_prints_the_logistic_prox() {
    let out = proxsplit(&["prox-eval", "--v", "0", "--gamma", "1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let p: f64 = out.stdout.trim().parse().unwrap();
    assert!((p - 0.40106).abs() < 1e-5, "{p}");
}

#[test]
fn w_eval_inverts_the_forward_map() {
    let out = proxsplit(&["w-eval", "--r", "1", "--v", "3.718281828"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let w: f64 = out.stdout.trim().parse().unwrap();
    assert!((w - 1.0).abs() < 1e-9, "{w}");
}

#[test]
fn missing_data_is_a_usage_error() {
    let out = proxsplit(&["train", "--lambda", "1"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("Usage"), "{}", out.stderr);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = proxsplit(&["train", "--no-such-flag", "1"]);
    assert_eq!(out.code, 2);
}

#[test]
fn unreadable_data_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let out = proxsplit(&["train", "--data", missing.to_str().unwrap()]);
    assert_eq!(out.code, 1, "{}", out.stderr);
}

#[test]
fn dual_step_times_shift_must_stay_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 1);
    let out = proxsplit(&["train", "--data", data.to_str().unwrap(), "--gamma", "2", "--rho", "0.6"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("gamma*rho < 1"), "{}", out.stderr);
}

#[test]
fn block_count_bounds_the_shift() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 1);
    let out = proxsplit(&["train", "--data", data.to_str().unwrap(), "--blocks", "4", "--gamma", "0.1", "--rho", "2"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("B*beta*rho <= 1"), "{}", out.stderr);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 2);
    let config = dir.path().join("run.conf");
    fs::write(&config, format!("data = {}\niters = 7\nlambda = 0.5 # comment\n", data.display())).unwrap();
    let config = config.to_str().unwrap();

    let out_dir = dir.path().join("a");
    let from_file = proxsplit(&["train", "--config", config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(from_file.code, 0, "{}", from_file.stderr);
    assert_eq!(value_after(&from_file.stdout, "iterations"), Some("7"));
    let model = fs::read_to_string(out_dir.join("model.txt")).unwrap();
    assert_eq!(value_after(&model, "lambda"), Some("0.5"));

    let flagged = proxsplit(&["train", "--config", config, "--iters", "3", "--lambda", "2"]);
    assert_eq!(flagged.code, 0, "{}", flagged.stderr);
    assert_eq!(value_after(&flagged.stdout, "iterations"), Some("3"));

    let defaults = proxsplit(&["train", "--data", data.to_str().unwrap()]);
    assert_eq!(defaults.code, 0, "{}", defaults.stderr);
    assert_eq!(value_after(&defaults.stdout, "iterations"), Some("1000"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "itters = 5\n").unwrap();
    let out = proxsplit(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("itters"), "{}", out.stderr);
}

#[test]
fn train_writes_model_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 3);
    let test = write_binary(dir.path(), "test.txt", 3);
    let out_dir = dir.path().join("run");
    let out = proxsplit(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--loss",
        "logistic",
        "--reg",
        "l1",
        "--lambda",
        "1",
        "--solver",
        "dr",
        "--blocks",
        "2",
        "--batch",
        "20",
        "--iters",
        "200",
        "--seed",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("test error"), "{}", out.stdout);

    let model = fs::read_to_string(out_dir.join("model.txt")).unwrap();
    assert_eq!(value_after(&model, "n_features"), Some("8"));
    assert_eq!(value_after(&model, "n_blocks"), Some("2"));
    assert_eq!(value_after(&model, "loss"), Some("logistic"));
    assert_eq!(read_model_weights(&model).unwrap().len(), 8);

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.lines().any(|l| l.starts_with("iter,")), "{trace}");
}

#[test]
fn hinge_loss_forces_zero_shift_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 5);
    let out =
        proxsplit(&["train", "--data", data.to_str().unwrap(), "--loss", "hinge", "--rho", "0.1", "--iters", "50"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stderr.contains("rho"), "{}", out.stderr);
}

#[test]
fn one_vs_all_writes_a_model_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..45 {
        let class = i % 3;
        let x: Vec<f64> = (0..3).map(|j| if j == class { 2.0 } else { 0.1 * (i % 5) as f64 }).collect();
        writeln!(text, "{} 1:{} 2:{} 3:{}", class + 1, x[0], x[1], x[2]).unwrap();
    }
    let data = dir.path().join("multi.txt");
    fs::write(&data, text).unwrap();
    let out_dir = dir.path().join("ova");
    let out = proxsplit(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--one-vs-all",
        "true",
        "--lambda",
        "0.1",
        "--iters",
        "300",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    for c in ["1", "2", "3"] {
        assert!(out_dir.join(format!("model_{c}.txt")).exists(), "class {c}");
        assert!(out_dir.join(format!("trace_{c}.csv")).exists(), "class {c}");
    }
}

#[test]
fn bench_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_binary(dir.path(), "train.txt", 6);
    let out_dir = dir.path().join("bench");
    let out = proxsplit(&[
        "bench",
        "--data",
        data.to_str().unwrap(),
        "--lambda",
        "1",
        "--iters",
        "100",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out_dir.join("summary.csv").exists());
    assert!(out.stdout.contains("dr"), "{}", out.stdout);
}
