//! Experiment runner for `shufflelab`: configuration parsing, trial
//! fan-out over a worker pool, aggregation into mean ± std tables of the
//! best-so-far training loss, theory checks and CSV/JSON output.

pub mod checks;
pub mod config;
pub mod emit;
mod error;
pub mod experiment;

pub use checks::{run_theory_checks, CheckResult, Suite};
pub use config::{ExperimentConfig, OutputFormat};
pub use emit::{emit_results, render_csv, render_json};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentOutput, SummaryRow, TraceEntry};
