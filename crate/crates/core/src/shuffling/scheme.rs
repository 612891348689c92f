use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::apr::{block_from_fraction, AprParams, AprState, AprStep};
use super::permutation::{
    block_shuffle, reverse, seed_for_epoch, uniform_permutation, Permutation,
};
use crate::{Error, Result};

/// Block size for block reshuffling: an absolute count or a fraction of `n`
/// (`max(1, floor(f * n))`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockSize {
    Fixed(usize),
    Fraction(f64),
}

impl BlockSize {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let b = match *self {
            BlockSize::Fixed(b) => b,
            BlockSize::Fraction(f) => block_from_fraction(f, n),
        };
        if b == 0 || b > n {
            return Err(Error::arg(format!("block size {b} invalid for n = {n}")));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Incremental gradient: identity order every epoch.
    Ig,
    /// Shuffle once: one uniform draw at epoch 0, reused.
    So,
    /// Random reshuffling: a fresh uniform draw per epoch.
    Rr,
    Block(BlockSize),
    Apr(AprParams),
    /// Even epochs take the inner scheme's order, the following odd epoch
    /// replays it reversed.
    PairedReversal(Box<SchemeKind>),
}

impl SchemeKind {
    pub fn needs_feedback(&self) -> bool {
        match self {
            SchemeKind::Apr(_) => true,
            SchemeKind::PairedReversal(inner) => inner.needs_feedback(),
            _ => false,
        }
    }

    /// Block size to use when reporting block-level gradient variance, if
    /// the scheme has one.
    pub fn nominal_block_size(&self, n: usize) -> Option<usize> {
        match self {
            SchemeKind::Block(b) => b.resolve(n).ok(),
            SchemeKind::Apr(p) => Some(p.strong_block(n)),
            SchemeKind::PairedReversal(inner) => inner.nominal_block_size(n),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Ig => write!(f, "ig"),
            SchemeKind::So => write!(f, "so"),
            SchemeKind::Rr => write!(f, "rr"),
            SchemeKind::Block(BlockSize::Fixed(b)) => write!(f, "block:{b}"),
            SchemeKind::Block(BlockSize::Fraction(x)) => write!(f, "block:{x:?}"),
            SchemeKind::Apr(_) => write!(f, "apr"),
            SchemeKind::PairedReversal(inner) => write!(f, "paired:{inner}"),
        }
    }
}

/// Parses `ig`, `so`, `rr`, `apr`, `block:<b>` (integer size, or a decimal
/// fraction of `n` such as `block:0.1`) and `paired:<inner>`.
impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "ig" => return Ok(SchemeKind::Ig),
            "so" => return Ok(SchemeKind::So),
            "rr" => return Ok(SchemeKind::Rr),
            "apr" => return Ok(SchemeKind::Apr(AprParams::default())),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("paired:") {
            return Ok(SchemeKind::PairedReversal(Box::new(inner.parse()?)));
        }
        if let Some(arg) = s.strip_prefix("block:") {
            let bad = || Error::Config(format!("bad block size in scheme {s:?}"));
            if arg.contains('.') {
                let f: f64 = arg.parse().map_err(|_| bad())?;
                if !(f > 0.0 && f <= 1.0) {
                    return Err(bad());
                }
                return Ok(SchemeKind::Block(BlockSize::Fraction(f)));
            }
            let b: usize = arg.parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            return Ok(SchemeKind::Block(BlockSize::Fixed(b)));
        }
        Err(Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Stateful per-epoch permutation generator for one trial.
#[derive(Debug, Clone)]
pub struct Shuffler {
    kind: SchemeKind,
    base_seed: u64,
    epoch: u64,
    state: SchemeState,
}

#[derive(Debug, Clone)]
enum SchemeState {
    Stateless,
    ShuffleOnce(Option<Permutation>),
    Apr(AprState),
    Paired {
        inner: Box<Shuffler>,
        pending: Option<Permutation>,
    },
}

impl Shuffler {
    pub fn new(kind: SchemeKind, base_seed: u64) -> Result<Self> {
        let state = match &kind {
            SchemeKind::So => SchemeState::ShuffleOnce(None),
            SchemeKind::Apr(p) => SchemeState::Apr(AprState::new(*p, base_seed)?),
            SchemeKind::PairedReversal(inner) => SchemeState::Paired {
                inner: Box::new(Shuffler::new((**inner).clone(), base_seed)?),
                pending: None,
            },
            SchemeKind::Block(BlockSize::Fraction(f)) if !(*f > 0.0 && *f <= 1.0) => {
                return Err(Error::Config(format!("block fraction {f} outside (0, 1]")));
            }
            _ => SchemeState::Stateless,
        };
        Ok(Self {
            kind,
            base_seed,
            epoch: 0,
            state,
        })
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// The APR controller's most recent decision, when this scheme has one.
    pub fn apr_step(&self) -> Option<&AprStep> {
        match &self.state {
            SchemeState::Apr(s) => s.last_step(),
            SchemeState::Paired { inner, .. } => inner.apr_step(),
            _ => None,
        }
    }

    /// Ordering for the next epoch. `feedback` is the loss signal consumed
    /// by APR and ignored by the other schemes.
    pub fn next_permutation(&mut self, n: usize, feedback: Option<f64>) -> Result<Permutation> {
        if n == 0 {
            return Err(Error::arg("cannot order an empty dataset"));
        }
        let e = self.epoch;
        let seed = seed_for_epoch(self.base_seed, e);
        let pi = match (&self.kind, &mut self.state) {
            (SchemeKind::Ig, _) => Permutation::identity(n),
            (SchemeKind::Rr, _) => uniform_permutation(n, seed)?,
            (SchemeKind::Block(b), _) => block_shuffle(n, b.resolve(n)?, seed)?,
            (SchemeKind::So, SchemeState::ShuffleOnce(cached)) => match cached {
                Some(p) if p.len() == n => p.clone(),
                _ => {
                    let p = uniform_permutation(n, seed_for_epoch(self.base_seed, 0))?;
                    *cached = Some(p.clone());
                    p
                }
            },
            (SchemeKind::Apr(_), SchemeState::Apr(state)) => {
                let loss = feedback
                    .ok_or_else(|| Error::arg("APR requires loss feedback every epoch"))?;
                state.next_permutation(n, loss)?
            }
            (SchemeKind::PairedReversal(_), SchemeState::Paired { inner, pending }) => {
                match pending.take() {
                    Some(p) if p.len() == n => reverse(&p),
                    _ => {
                        let p = inner.next_permutation(n, feedback)?;
                        *pending = Some(p.clone());
                        p
                    }
                }
            }
            _ => unreachable!("scheme state always matches its kind"),
        };
        debug_assert!(pi.is_valid() && pi.len() == n);
        self.epoch += 1;
        Ok(pi)
    }
}
