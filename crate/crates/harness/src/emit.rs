use std::path::Path;

use crate::config::OutputFormat;
use crate::error::{HarnessError, Result};
use crate::experiment::SummaryRow;

pub const CSV_HEADER: [&str; 8] = [
    "dataset",
    "task",
    "schedule",
    "scheme",
    "mean_best_loss",
    "std_best_loss",
    "selected_gamma0",
    "divergence_count",
];

/// Marker written in place of statistics when every trial diverged.
pub const DIVERGED: &str = "diverged";

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn stat(x: Option<f64>) -> String {
    x.map_or_else(|| DIVERGED.to_string(), sig9)
}

pub fn render_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.task.clone(),
            r.schedule.clone(),
            r.scheme.clone(),
            stat(r.mean_best_loss),
            stat(r.std_best_loss),
            sig9(r.selected_gamma0),
            r.divergence_count.to_string(),
        ])
        .map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Serialize(e.to_string()))
}

pub fn render_json(rows: &[SummaryRow]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(rows).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render(rows: &[SummaryRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

/// Writes `rows` to `path` in the requested format.
pub fn emit_results(rows: &[SummaryRow], format: OutputFormat, path: &Path) -> Result<()> {
    let body = render(rows, format)?;
    std::fs::write(path, body).map_err(|e| HarnessError::io(path, e))
}

pub fn parse_json_rows(text: &str) -> Result<Vec<SummaryRow>> {
    serde_json::from_str(text).map_err(|e| HarnessError::Serialize(e.to_string()))
}
