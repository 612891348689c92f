use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::logistic::DEFAULT_L2;
use super::{LinearRegression, LogisticRegression, Mlp, QuadLin, QuadraticEnsemble};
use crate::data::Dataset;
use crate::{DynProblem, Error, Result};

/// Declarative description of a problem, written as a kind followed by
/// `key=value` options:
///
/// ```text
/// quadlin a=2 b=3 w0=1
/// quadratic n=4 d=3 seed=7
/// logreg lambda=1e-4            (needs a dataset)
/// linreg lambda=0               (needs a dataset)
/// mlp 784-256-128-10            (needs a dataset)
/// synthetic-logreg n=2000 d=20 seed=1 lambda=1e-4
/// synthetic-linreg n=500 d=8 seed=1 noise=0.1
/// ```
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    QuadLin { a: f64, b: f64, w0: f64 },
    Quadratic { n: usize, d: usize, seed: u64 },
    LogReg { lambda: f64 },
    LinReg { lambda: f64 },
    Mlp { sizes: Vec<usize> },
    SyntheticLogReg { n: usize, d: usize, seed: u64, lambda: f64 },
    SyntheticLinReg { n: usize, d: usize, seed: u64, noise: f64 },
}

impl ProblemSpec {
    pub fn needs_dataset(&self) -> bool {
        matches!(self, ProblemSpec::LogReg { .. } | ProblemSpec::LinReg { .. } | ProblemSpec::Mlp { .. })
    }
}

struct Options {
    kind: String,
    positional: Vec<String>,
    kv: BTreeMap<String, String>,
}

impl Options {
    fn parse(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::Config("empty problem spec".into()))?
            .to_ascii_lowercase();
        let mut positional = Vec::new();
        let mut kv = BTreeMap::new();
        for t in tokens {
            match t.split_once('=') {
                Some((k, v)) => {
                    kv.insert(k.to_ascii_lowercase(), v.to_string());
                }
                None => positional.push(t.to_string()),
            }
        }
        Ok(Self { kind, positional, kv })
    }

    fn get<V: FromStr>(&mut self, key: &str, default: Option<V>) -> Result<V> {
        match self.kv.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{}: bad value {v:?} for {key}", self.kind))),
            None => default.ok_or_else(|| Error::Config(format!("{}: missing {key}=", self.kind))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.kv.keys().next() {
            return Err(Error::Config(format!("{}: unknown option {k:?}", self.kind)));
        }
        if !self.positional.is_empty() {
            return Err(Error::Config(format!(
                "{}: unexpected arguments {:?}",
                self.kind, self.positional
            )));
        }
        Ok(())
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut o = Options::parse(s)?;
        let spec = match o.kind.as_str() {
            "quadlin" => ProblemSpec::QuadLin {
                a: o.get("a", Some(2.0))?,
                b: o.get("b", Some(3.0))?,
                w0: o.get("w0", Some(1.0))?,
            },
            "quadratic" => ProblemSpec::Quadratic {
                n: o.get("n", None)?,
                d: o.get("d", None)?,
                seed: o.get("seed", Some(0))?,
            },
            "logreg" => ProblemSpec::LogReg {
                lambda: o.get("lambda", Some(DEFAULT_L2))?,
            },
            "linreg" => ProblemSpec::LinReg {
                lambda: o.get("lambda", Some(0.0))?,
            },
            "mlp" => {
                let layout = std::mem::take(&mut o.positional);
                let [layout] = layout.as_slice() else {
                    return Err(Error::Config("mlp: expected one layer layout like 784-256-128-10".into()));
                };
                let sizes = layout
                    .split('-')
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Config(format!("mlp: bad layer layout {layout:?}")))?;
                if sizes.len() < 2 || sizes.contains(&0) {
                    return Err(Error::Config(format!("mlp: bad layer layout {layout:?}")));
                }
                ProblemSpec::Mlp { sizes }
            }
            "synthetic-logreg" => ProblemSpec::SyntheticLogReg {
                n: o.get("n", None)?,
                d: o.get("d", None)?,
                seed: o.get("seed", Some(0))?,
                lambda: o.get("lambda", Some(DEFAULT_L2))?,
            },
            "synthetic-linreg" => ProblemSpec::SyntheticLinReg {
                n: o.get("n", None)?,
                d: o.get("d", None)?,
                seed: o.get("seed", Some(0))?,
                noise: o.get("noise", Some(0.1))?,
            },
            other => return Err(Error::Config(format!("unknown problem kind {other:?}"))),
        };
        o.finish()?;
        Ok(spec)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::QuadLin { a, b, w0 } => write!(f, "quadlin a={a} b={b} w0={w0}"),
            ProblemSpec::Quadratic { n, d, seed } => write!(f, "quadratic n={n} d={d} seed={seed}"),
            ProblemSpec::LogReg { lambda } => write!(f, "logreg lambda={lambda}"),
            ProblemSpec::LinReg { lambda } => write!(f, "linreg lambda={lambda}"),
            ProblemSpec::Mlp { sizes } => {
                let s: Vec<String> = sizes.iter().map(usize::to_string).collect();
                write!(f, "mlp {}", s.join("-"))
            }
            ProblemSpec::SyntheticLogReg { n, d, seed, lambda } => {
                write!(f, "synthetic-logreg n={n} d={d} seed={seed} lambda={lambda}")
            }
            ProblemSpec::SyntheticLinReg { n, d, seed, noise } => {
                write!(f, "synthetic-linreg n={n} d={d} seed={seed} noise={noise}")
            }
        }
    }
}

/// Builds the `f64` problem described by `spec`. Data-backed kinds take
/// their samples from `dataset`.
pub fn make_problem(spec: &ProblemSpec, dataset: Option<&Dataset>) -> Result<DynProblem> {
    let data = || {
        dataset.ok_or_else(|| Error::Config(format!("problem {spec} requires a dataset")))
    };
    Ok(match spec {
        ProblemSpec::QuadLin { a, b, w0 } => Box::new(QuadLin::new(*a, *b, *w0)?),
        ProblemSpec::Quadratic { n, d, seed } => Box::new(QuadraticEnsemble::random(*n, *d, *seed)?),
        ProblemSpec::LogReg { lambda } => Box::new(LogisticRegression::from_dataset(data()?, *lambda)?),
        ProblemSpec::LinReg { lambda } => Box::new(LinearRegression::from_dataset(data()?, *lambda)?),
        ProblemSpec::Mlp { sizes } => Box::new(Mlp::from_dataset(sizes.clone(), data()?)?),
        ProblemSpec::SyntheticLogReg { n, d, seed, lambda } => {
            Box::new(LogisticRegression::synthetic(*n, *d, *seed, *lambda)?)
        }
        ProblemSpec::SyntheticLinReg { n, d, seed, noise } => {
            Box::new(LinearRegression::synthetic(*n, *d, *seed, *noise)?)
        }
    })
}
