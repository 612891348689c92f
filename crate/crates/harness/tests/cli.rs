use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shufflelab_harness::emit::{parse_json_rows, sig9, CSV_HEADER};
use shufflelab_harness::experiment::{SummaryRow, TraceEntry};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shufflelab"));
    c.env_remove("SHUFFLE_LAB_SEED");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_with(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).args(extra).output().unwrap()
}

const SMALL: &str = "\
problem = quadratic n=12 d=3 seed=5
schemes = ig, rr, apr, block:4
grid = 0.2, 0.02
epochs = 6
inits = 2
runs = 3
base_seed = 11
";

#[test]
fn run_to_stdout_has_header_and_one_row_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let out = run_with(&cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("synthetic,quadratic,constant,ig,"));
}

#[test]
fn trace_recomputes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let json = dir.path().join("out.json");
    let out = run_with(&cfg, &["--format", "json", "--trace", "--out", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows: Vec<SummaryRow> = parse_json_rows(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let trace = std::fs::read_to_string(dir.path().join("out.trace.jsonl")).unwrap();
    let trials: Vec<TraceEntry> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trials.len(), 4 * 2 * 6);

    for row in &rows {
        let finals: Vec<f64> = trials
            .iter()
            .filter(|t| t.scheme == row.scheme && t.gamma0 == row.selected_gamma0 && !t.record.is_diverged())
            .map(|t| *t.record.best_so_far.last().unwrap())
            .collect();
        assert_eq!(finals.len(), 6 - row.divergence_count);
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((row.mean_best_loss.unwrap() - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((row.std_best_loss.unwrap() - std).abs() <= 1e-12 * mean.abs().max(1.0));
        // The selected point has the lowest mean among the grid.
        for g in [0.2, 0.02] {
            let other: Vec<f64> = trials
                .iter()
                .filter(|t| t.scheme == row.scheme && t.gamma0 == g && !t.record.is_diverged())
                .map(|t| *t.record.best_so_far.last().unwrap())
                .collect();
            if !other.is_empty() {
                assert!(mean <= other.iter().sum::<f64>() / other.len() as f64 + 1e-15);
            }
        }
    }
}

#[test]
fn set_overrides_and_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", &SMALL.replace("base_seed = 11\n", ""));
    let base = bin().args(["run", "--config"]).arg(&cfg).env("SHUFFLE_LAB_SEED", "11").output().unwrap();
    let explicit = run_with(&cfg, &["--set", "base_seed=11"]);
    let other = run_with(&cfg, &["--set", "base_seed=12"]);
    assert!(base.status.success() && explicit.status.success() && other.status.success());
    assert_eq!(base.stdout, explicit.stdout);
    assert_ne!(base.stdout, other.stdout);

    let one = run_with(&cfg, &["--set", "schemes=rr", "--set", "epochs=2"]);
    assert_eq!(String::from_utf8(one.stdout).unwrap().lines().count(), 2);
}

#[test]
fn all_diverged_rows_use_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.cfg",
        "problem = quadlin a=2 b=3 w0=1\nschemes = rr\ngrid = 1000\nepochs = 20\ninits = 1\nruns = 2\nbase_seed = 1\n",
    );
    let out = run_with(&cfg, &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "synthetic,quadlin,constant,rr,diverged,diverged,1000,2");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "problem = quadlin\ncolour = blue\n");
    assert_eq!(run_with(&bad, &[]).status.code(), Some(1));

    let missing = dir.path().join("absent.cfg");
    assert_eq!(run_with(&missing, &[]).status.code(), Some(2));

    let no_data = write(dir.path(), "nd.cfg", "problem = logreg\ndata = nowhere.svm\nbase_seed = 1\n");
    assert_eq!(run_with(&no_data, &[]).status.code(), Some(2));

    let perm = bin().args(["permute", "--scheme", "apr", "--n", "10", "--epochs", "2"]).output().unwrap();
    assert_eq!(perm.status.code(), Some(1));
}

#[test]
fn check_suite_passes() {
    let out = bin().args(["check", "--suite", "variance", "--json"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = report.as_array().unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|r| r["passed"] == true));
}

#[test]
fn permute_prints_bijections() {
    let out = bin()
        .args(["permute", "--scheme", "apr", "--n", "20", "--epochs", "3", "--seed", "4", "--losses", "1,0.5,0.6"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains("Strong"));
}

#[test]
fn libsvm_file_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut svm = String::new();
    for i in 0..40 {
        let y = if i % 3 == 0 { "-1" } else { "+1" };
        svm.push_str(&format!("{y} 1:{} 3:{}\n", sig9(i as f64 * 0.25), sig9((i % 7) as f64)));
    }
    write(dir.path(), "toy.svm", &svm);
    let cfg = write(
        dir.path(),
        "t.cfg",
        "problem = logreg lambda=1e-3\ndata = toy.svm\nschemes = so, rr\ngrid = 0.1, 0.01\nepochs = 3\ninits = 1\nruns = 2\nbase_seed = 5\n",
    );
    let out = run_with(&cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("toy,logreg,constant,so,"));
}
