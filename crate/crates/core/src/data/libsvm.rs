use std::fmt::Write;

use super::dataset::{Dataset, Features};
use crate::{Error, Result};

/// Parses `<label> (<index>:<value>)*` lines with 1-based indices.
///
/// Text after `#` is ignored, blank lines are skipped. Indices become
/// 0-based and must increase strictly within a line. Binary label sets are
/// mapped to `{-1, +1}` (see [`Dataset::map_binary_labels`]).
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut n_features = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(line_no, format!("bad label {label_tok:?}")))?;

        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(Error::parse(line_no, "feature indices are 1-based"));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("bad feature value {val:?}")))?;
            let col = idx - 1;
            if row.last().is_some_and(|&(prev, _)| col <= prev) {
                return Err(Error::parse(line_no, format!("feature index {idx} not increasing")));
            }
            n_features = n_features.max(idx);
            row.push((col, val));
        }
        rows.push(row);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(Error::parse(0, "empty file"));
    }
    Ok(Dataset::from_sparse(n_features, rows, labels)?.map_binary_labels())
}

/// Writes the dataset in LIBSVM format. Dense inputs emit only nonzero
/// entries; sparse inputs keep their stored entries (including explicit zeros).
pub fn serialize_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..ds.n_samples() {
        write!(out, "{}", ds.labels()[i]).unwrap();
        match ds.features() {
            Features::Sparse(rows) => {
                for &(c, x) in &rows[i] {
                    write!(out, " {}:{}", c + 1, x).unwrap();
                }
            }
            Features::Dense(_) => {
                for (c, x) in ds.row_dense(i).into_iter().enumerate() {
                    if x != 0.0 {
                        write!(out, " {}:{}", c + 1, x).unwrap();
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn two_line_example() {
        let ds = parse_libsvm("+1 1:0.5 3:2\n-1 2:1\n").unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.labels(), &[1.0, -1.0]);
        assert_eq!(ds.row_dense(0), vec![0.5, 0.0, 2.0]);
        assert_eq!(ds.row_dense(1), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let ds = parse_libsvm("# header\n1 1:1 # trailing\n\n2 2:3\n").unwrap();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
        assert_eq!(ds.n_features(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_libsvm("").unwrap_err();
        assert!(err.to_string().contains("empty file"), "{err}");
        assert!(parse_libsvm("# only a comment\n").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            parse_libsvm("1 1:1\n1 3:1 2:1\n").unwrap_err(),
            Error::parse(2, "feature index 2 not increasing")
        );
        assert!(matches!(parse_libsvm("1 1:x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 1:1\nabc 1:1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_libsvm("1 0:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm("1 4\n"), Err(Error::Parse { line: 1, .. })));
    }

    fn sparse_rows() -> impl Strategy<Value = Vec<(bool, Vec<(usize, f64)>)>> {
        let row = (
            any::<bool>(),
            prop::collection::btree_map(0usize..40, -1e6f64..1e6, 0..8),
        )
            .prop_map(|(pos, m)| (pos, m.into_iter().collect::<Vec<_>>()));
        prop::collection::vec(row, 1..100)
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(rows in sparse_rows()) {
            let labels: Vec<f64> = rows.iter().map(|(p, _)| if *p { 1.0 } else { -1.0 }).collect();
            let rows: Vec<Vec<(usize, f64)>> = rows.into_iter().map(|(_, r)| r).collect();
            let width = rows.iter().filter_map(|r| r.last()).map(|&(c, _)| c + 1).max().unwrap_or(0);
            let ds = Dataset::from_sparse(width, rows, labels).unwrap();
            let back = parse_libsvm(&serialize_libsvm(&ds)).unwrap();
            prop_assert_eq!(back.features(), ds.features());
            prop_assert_eq!(back.n_features(), ds.n_features());
            prop_assert_eq!(back.labels(), ds.labels());
        }
    }
}
