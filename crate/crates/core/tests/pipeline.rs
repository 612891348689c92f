use shufflelab::data::{parse_csv, parse_libsvm, serialize_libsvm, standardize};
use shufflelab::optimize::{run_trial, OptimizerConfig};
use shufflelab::problems::{LinearRegression, LogisticRegression};
use shufflelab::shuffling::SchemeKind;
use shufflelab::{Error, FiniteSum, SeededGenerator};

fn toy_libsvm(n: usize, seed: u64) -> String {
    let mut g = SeededGenerator::new(seed);
    let mut out = String::new();
    for _ in 0..n {
        let (x1, x3) = (g.next_gaussian(), 4.0 + 2.0 * g.next_gaussian());
        let label = if x1 - 0.3 * (x3 - 4.0) > 0.0 { 2 } else { 1 };
        out.push_str(&format!("{label} 1:{x1} 3:{x3}\n"));
    }
    out
}

#[test]
fn libsvm_standardize_train() {
    let raw = parse_libsvm(&toy_libsvm(120, 9)).unwrap().map_binary_labels();
    assert!(raw.labels().iter().all(|&y| y == 1.0 || y == -1.0));

    // Feature 2 never appears, so it is constant and dropped.
    let ds = standardize(&raw).unwrap();
    assert_eq!(ds.n_features(), 2);
    assert_eq!(ds.feature_stats().unwrap().dropped, vec![1]);

    let p = LogisticRegression::from_dataset(&ds, 1e-4).unwrap();
    let rec = run_trial(&p, &SchemeKind::Rr, &OptimizerConfig::sgd(0.1, 15), 3, 4).unwrap();
    assert!(!rec.is_diverged());
    let start = p.full_loss(&vec![0.0; p.dim()]);
    assert!(rec.final_best().unwrap() < 0.6 * start, "{:?}", rec.per_epoch_loss);
}

#[test]
fn libsvm_round_trip_preserves_values() {
    let ds = parse_libsvm(&toy_libsvm(30, 2)).unwrap();
    let again = parse_libsvm(&serialize_libsvm(&ds)).unwrap();
    assert_eq!(again.to_dense(), ds.to_dense());
    assert_eq!(again.labels(), ds.labels());
}

#[test]
fn csv_regression_pipeline() {
    let mut text = String::from("y,a,b\n");
    let mut g = SeededGenerator::new(5);
    for _ in 0..80 {
        let (a, b) = (g.next_gaussian(), 10.0 * g.next_gaussian());
        text.push_str(&format!("{},{a},{b}\n", 2.0 * a - 0.1 * b + 0.01 * g.next_gaussian()));
    }
    let ds = standardize(&parse_csv(&text, "y", true).unwrap()).unwrap();
    let p = LinearRegression::from_dataset(&ds, 0.0).unwrap();
    let rec = run_trial(&p, &"so".parse().unwrap(), &OptimizerConfig::sgd(0.02, 40), 1, 1).unwrap();
    assert!(rec.final_best().unwrap() < 1e-3, "{:?}", rec.per_epoch_loss.last());
}

#[test]
fn malformed_inputs_are_parse_errors() {
    for bad in ["+1 1:2 1:3\n", "+1 0:1\n", "x 1:1\n", "+1 1:nan\n", "+1 2:1 1:1\n"] {
        assert!(matches!(parse_libsvm(bad), Err(Error::Parse { .. })), "{bad:?}");
    }
    assert!(matches!(parse_csv("1,2\n3\n", 0usize, false), Err(Error::Parse { .. })));
}
