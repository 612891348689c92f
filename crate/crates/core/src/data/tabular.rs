use super::dataset::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    /// Requires a header row.
    Name(String),
}

impl From<usize> for LabelColumn {
    fn from(i: usize) -> Self {
        LabelColumn::Index(i)
    }
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        LabelColumn::Name(s.to_string())
    }
}

/// Reads a comma separated numeric table. The label column becomes the
/// targets, every other column a dense feature. Missing or non-numeric cells
/// and ragged rows are errors; nothing is imputed.
pub fn parse_csv(text: &str, label_column: impl Into<LabelColumn>, has_header: bool) -> Result<Dataset> {
    let label_column = label_column.into();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let label_idx = match &label_column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::Config(format!(
                    "label column {name:?} given by name but the file has no header"
                )));
            }
            let headers = reader.headers().map_err(|e| csv_error(e, 1))?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::parse(1, format!("no column named {name:?}")))?
        }
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let first_data_line = if has_header { 2 } else { 1 };

    for (r, record) in reader.records().enumerate() {
        let line = first_data_line + r;
        let record = record.map_err(|e| csv_error(e, line))?;
        if width.is_none() {
            if label_idx >= record.len() {
                return Err(Error::Config(format!(
                    "label column {label_idx} out of range for {} columns",
                    record.len()
                )));
            }
            width = Some(record.len());
        }
        for (c, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::parse(line, format!("row {}, column {}: non-numeric cell {cell:?}", r + 1, c + 1))
            })?;
            if c == label_idx {
                labels.push(x);
            } else {
                values.push(x);
            }
        }
    }

    let width = width.ok_or_else(|| Error::parse(0, "empty file"))?;
    Dataset::from_dense(width - 1, values, labels)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map_or(fallback_line, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::parse(
            line,
            format!("ragged row {line}: {len} fields, expected {expected_len}"),
        ),
        _ => Error::parse(line, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_label_column() {
        let ds = parse_csv("x,y,t\n1,2,3\n4,5,6\n", "t", true).unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.to_dense(), vec![1.0, 2.0, 4.0, 5.0]);
        assert_eq!(ds.labels(), &[3.0, 6.0]);
    }

    #[test]
    fn indexed_label_without_header() {
        let ds = parse_csv("7,1,2\n", 0, false).unwrap();
        assert_eq!(ds.n_samples(), 1);
        assert_eq!(ds.labels(), &[7.0]);
        assert_eq!(ds.to_dense(), vec![1.0, 2.0]);
    }

    #[test]
    fn ragged_row_is_named() {
        let err = parse_csv("a,b\n1,2\n3\n", 1, true).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("ragged row 3"), "{err}");
    }

    #[test]
    fn non_numeric_and_missing_cells() {
        let err = parse_csv("a,b\n1,x\n", 1, true).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");
        assert!(parse_csv("a,b\n1,\n", 1, true).is_err());
    }

    #[test]
    fn empty_and_bad_label() {
        assert!(parse_csv("", 0, false).is_err());
        assert!(parse_csv("a,b\n1,2\n", "c", true).is_err());
        assert!(parse_csv("1,2\n", "b", false).is_err());
        assert!(parse_csv("1,2\n", 5, false).is_err());
    }
}
