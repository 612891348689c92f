//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! dataset    = synthetic
//! task       = logreg
//! problem    = synthetic-logreg n=2000 d=20 seed=1 lambda=1e-4
//! schemes    = ig, so, rr, apr, block:0.1
//! schedules  = constant, poly:0.5
//! grid       = 0.5, 0.1, 0.05, 0.01
//! epochs     = 100
//! inits      = 5
//! runs       = 5
//! base_seed  = 42
//! ```
//!
//! Data-backed problems additionally set `data = <path>` and optionally
//! `data_format` (`libsvm` or `csv`, inferred from the extension
//! otherwise), `label_column`, `header`, `binarize` and `standardize`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use shufflelab::optimize::{AdamParams, OptimizerConfig, OptimizerKind, Schedule};
use shufflelab::problems::ProblemSpec;
use shufflelab::shuffling::SchemeKind;

use crate::error::{HarnessError, Result};

/// Environment variable consulted when the config sets no `base_seed`.
pub const SEED_ENV: &str = "SHUFFLE_LAB_SEED";

const KEYS: &[&str] = &[
    "dataset",
    "task",
    "problem",
    "data",
    "data_format",
    "label_column",
    "header",
    "binarize",
    "standardize",
    "schemes",
    "schedules",
    "optimizer",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "grid",
    "epochs",
    "batch_size",
    "inits",
    "runs",
    "base_seed",
    "out",
    "format",
    "workers",
    "diagnostics",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::config(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub path: PathBuf,
    pub format: DataFormat,
    /// Column index or header name of the label (CSV only).
    pub label_column: String,
    pub header: bool,
    /// Labels above the threshold become +1, the rest -1.
    pub binarize: Option<f64>,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub task: String,
    pub problem: ProblemSpec,
    pub data: Option<DataSource>,
    pub schemes: Vec<SchemeKind>,
    pub schedules: Vec<Schedule<f64>>,
    pub optimizer: OptimizerKind<f64>,
    pub grid: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub inits: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
    /// Compute gradient-variance diagnostics for block-structured schemes.
    pub diagnostics: bool,
}

impl ExperimentConfig {
    /// Parses a config file body. Relative data paths are resolved against
    /// `base_dir`. `overrides` are extra `key=value` pairs applied last.
    pub fn parse(text: &str, base_dir: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("line {}: expected key = value", lineno + 1)))?;
            insert(&mut kv, k, v)?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("override {o:?}: expected key=value")))?;
            insert(&mut kv, k, v)?;
        }
        Self::from_map(kv, base_dir)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, path.parent(), overrides)
    }

    fn from_map(mut kv: BTreeMap<String, String>, base_dir: Option<&Path>) -> Result<Self> {
        let mut take = |k: &str| kv.remove(k);

        let problem_text = take("problem").ok_or_else(|| HarnessError::config("missing key: problem"))?;
        let problem: ProblemSpec = problem_text
            .parse()
            .map_err(|e: shufflelab::Error| HarnessError::config(e.to_string()))?;
        let task = take("task").unwrap_or_else(|| problem_text.split_whitespace().next().unwrap_or("").to_string());

        let data = match take("data") {
            None => None,
            Some(p) => {
                let path = match base_dir {
                    Some(dir) if Path::new(&p).is_relative() => dir.join(&p),
                    _ => PathBuf::from(&p),
                };
                let format = match take("data_format") {
                    Some(f) => parse_data_format(&f)?,
                    None => match path.extension().and_then(|e| e.to_str()) {
                        Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
                        _ => DataFormat::Libsvm,
                    },
                };
                Some(DataSource {
                    path,
                    format,
                    label_column: take("label_column").unwrap_or_else(|| "0".into()),
                    header: parse_value("header", take("header"), false)?,
                    binarize: take("binarize").map(|v| parse_value("binarize", Some(v), 0.0)).transpose()?,
                    standardize: parse_value("standardize", take("standardize"), true)?,
                })
            }
        };
        if problem.needs_dataset() && data.is_none() {
            return Err(HarnessError::config(format!("problem {problem} needs data = <path>")));
        }
        let dataset = take("dataset").unwrap_or_else(|| match &data {
            Some(d) => d.path.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string(),
            None => "synthetic".into(),
        });

        let schemes = list(take("schemes").as_deref().unwrap_or("ig, so, rr, apr"))
            .map(|s| s.parse::<SchemeKind>().map_err(|e| HarnessError::config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let schedules = list(take("schedules").as_deref().unwrap_or("constant"))
            .map(parse_schedule)
            .collect::<Result<Vec<_>>>()?;
        let optimizer = match take("optimizer").as_deref().unwrap_or("sgd") {
            "sgd" => OptimizerKind::Sgd,
            "adam" => {
                let d = AdamParams::<f64>::default();
                OptimizerKind::Adam(AdamParams {
                    beta1: parse_value("adam_beta1", take("adam_beta1"), d.beta1)?,
                    beta2: parse_value("adam_beta2", take("adam_beta2"), d.beta2)?,
                    eps: parse_value("adam_eps", take("adam_eps"), d.eps)?,
                })
            }
            other => return Err(HarnessError::config(format!("unknown optimizer {other:?}"))),
        };
        let grid = list(take("grid").as_deref().unwrap_or("0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001"))
            .map(|g| parse_value("grid", Some(g.to_string()), 0.0))
            .collect::<Result<Vec<f64>>>()?;

        let base_seed = match take("base_seed") {
            Some(v) => parse_value("base_seed", Some(v), 0)?,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| HarnessError::config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
                Err(_) => 0,
            },
        };

        let cfg = ExperimentConfig {
            dataset,
            task,
            problem,
            data,
            schemes,
            schedules,
            optimizer,
            grid,
            epochs: parse_value("epochs", take("epochs"), 100)?,
            batch_size: parse_value("batch_size", take("batch_size"), 1)?,
            inits: parse_value("inits", take("inits"), 5)?,
            runs: parse_value("runs", take("runs"), 5)?,
            base_seed,
            out: take("out").map(PathBuf::from),
            format: take("format").map(|f| f.parse()).transpose()?.unwrap_or_default(),
            workers: take("workers").map(|w| parse_value("workers", Some(w), 1)).transpose()?,
            diagnostics: parse_value("diagnostics", take("diagnostics"), true)?,
        };
        if let Some(k) = kv.keys().next() {
            return Err(HarnessError::config(format!("unknown key {k:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(HarnessError::config("schemes must not be empty"));
        }
        if self.schedules.is_empty() {
            return Err(HarnessError::config("schedules must not be empty"));
        }
        if self.grid.is_empty() {
            return Err(HarnessError::config("grid must not be empty"));
        }
        if self.inits == 0 || self.runs == 0 {
            return Err(HarnessError::config("inits and runs must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::config("workers must be at least 1"));
        }
        for &gamma in &self.grid {
            for schedule in &self.schedules {
                self.optimizer_config(*schedule, gamma)
                    .validate()
                    .map_err(|e| HarnessError::config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn optimizer_config(&self, schedule: Schedule<f64>, gamma0: f64) -> OptimizerConfig<f64> {
        OptimizerConfig {
            kind: self.optimizer,
            gamma0,
            schedule,
            batch_size: self.batch_size,
            epochs: self.epochs,
        }
    }

    /// Repetitions per grid point.
    pub fn repetitions(&self) -> usize {
        self.inits * self.runs
    }
}

fn insert(kv: &mut BTreeMap<String, String>, k: &str, v: &str) -> Result<()> {
    let k = k.trim().to_ascii_lowercase();
    if !KEYS.contains(&k.as_str()) {
        return Err(HarnessError::config(format!("unknown key {k:?}")));
    }
    kv.insert(k, v.trim().to_string());
    Ok(())
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_value<V: FromStr>(key: &str, raw: Option<String>, default: V) -> Result<V> {
    match raw {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| HarnessError::config(format!("{key}: cannot parse {v:?}"))),
    }
}

fn parse_data_format(s: &str) -> Result<DataFormat> {
    match s.to_ascii_lowercase().as_str() {
        "libsvm" | "svmlight" => Ok(DataFormat::Libsvm),
        "csv" => Ok(DataFormat::Csv),
        other => Err(HarnessError::config(format!("unknown data format {other:?}"))),
    }
}

/// `constant` or `poly:<alpha>`.
pub fn parse_schedule(s: &str) -> Result<Schedule<f64>> {
    match s.split_once(':') {
        None if s == "constant" => Ok(Schedule::Constant),
        Some(("poly", a)) => {
            let alpha: f64 = a
                .parse()
                .map_err(|_| HarnessError::config(format!("bad schedule exponent in {s:?}")))?;
            Ok(Schedule::Poly { alpha })
        }
        _ => Err(HarnessError::config(format!("unknown schedule {s:?}"))),
    }
}
