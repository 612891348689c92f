use serde::{Deserialize, Serialize};

use super::permutation::{
    block_shuffle, even_odd_interleave, reverse, seed_for_epoch, uniform_permutation, Permutation,
};
use crate::{Error, Result};

/// Parameters of the adaptive block reshuffling controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprParams {
    pub tau_strong: f64,
    pub tau_mild: f64,
    pub alpha_strong: f64,
    pub alpha_mild: f64,
    pub p_rev: u64,
    pub r_rev: u64,
    pub p_eo: u64,
    pub r_eo: u64,
    pub epsilon: f64,
}

impl Default for AprParams {
    fn default() -> Self {
        Self {
            tau_strong: 0.9,
            tau_mild: 1.0,
            alpha_strong: 0.1,
            alpha_mild: 0.2,
            p_rev: 3,
            r_rev: 0,
            p_eo: 3,
            r_eo: 1,
            epsilon: 1e-10,
        }
    }
}

impl AprParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("apr: {m}")));
        if !(self.tau_strong > 0.0 && self.tau_strong < self.tau_mild) {
            return fail("need 0 < tau_strong < tau_mild");
        }
        for (name, a) in [("alpha_strong", self.alpha_strong), ("alpha_mild", self.alpha_mild)] {
            if !(a > 0.0 && a <= 1.0) {
                return fail(&format!("{name} must lie in (0, 1]"));
            }
        }
        if self.p_rev == 0 || self.p_eo == 0 {
            return fail("periods must be >= 1");
        }
        if self.r_rev >= self.p_rev || self.r_eo >= self.p_eo {
            return fail("phases must be smaller than their periods");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        Ok(())
    }

    /// `max(1, floor(alpha_strong * n))`
    pub fn strong_block(&self, n: usize) -> usize {
        block_from_fraction(self.alpha_strong, n)
    }

    /// `max(1, floor(alpha_mild * n))`
    pub fn mild_block(&self, n: usize) -> usize {
        block_from_fraction(self.alpha_mild, n)
    }

    /// Three-way branch on the loss ratio. Ties go to the less aggressive
    /// branch because both comparisons are strict.
    pub fn classify(&self, ratio: f64) -> Regime {
        if ratio < self.tau_strong {
            Regime::Strong
        } else if ratio < self.tau_mild {
            Regime::Mild
        } else {
            Regime::Fallback
        }
    }
}

pub(crate) fn block_from_fraction(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64).floor() as usize).clamp(1, n.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Hash, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Initial,
    Strong,
    Mild,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Hash, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Reverse,
    EvenOdd,
}

/// What the controller did at one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprStep {
    pub epoch: u64,
    pub ratio: Option<f64>,
    pub regime: Regime,
    pub block_size: Option<usize>,
    pub transform: Transform,
}

/// Loss-ratio gated controller. One call to [`AprState::next_permutation`]
/// per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AprState {
    params: AprParams,
    base_seed: u64,
    prev_loss: Option<f64>,
    epoch: u64,
    last_step: Option<AprStep>,
}

impl AprState {
    pub fn new(params: AprParams, base_seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            base_seed,
            prev_loss: None,
            epoch: 0,
            last_step: None,
        })
    }

    pub fn params(&self) -> &AprParams {
        &self.params
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn prev_loss(&self) -> Option<f64> {
        self.prev_loss
    }

    pub fn last_regime(&self) -> Regime {
        self.last_step.as_ref().map_or(Regime::Initial, |s| s.regime)
    }

    pub fn last_step(&self) -> Option<&AprStep> {
        self.last_step.as_ref()
    }

    /// Produces the ordering for the current epoch from the loss `current_loss`
    /// observed so far, then advances the epoch counter.
    pub fn next_permutation(&mut self, n: usize, current_loss: f64) -> Result<Permutation> {
        if !current_loss.is_finite() || current_loss < 0.0 {
            return Err(Error::arg(format!(
                "APR loss feedback must be finite and non-negative, got {current_loss}"
            )));
        }
        if n == 0 {
            return Err(Error::arg("APR requires n >= 1"));
        }
        let e = self.epoch;
        let seed = seed_for_epoch(self.base_seed, e);
        let p = &self.params;

        let (pi, step) = match self.prev_loss {
            None => (
                uniform_permutation(n, seed)?,
                AprStep {
                    epoch: e,
                    ratio: None,
                    regime: Regime::Initial,
                    block_size: None,
                    transform: Transform::None,
                },
            ),
            Some(prev) => {
                let ratio = current_loss / (prev + p.epsilon);
                let regime = p.classify(ratio);
                let mut transform = Transform::None;
                let mut block_size = None;
                let pi = match regime {
                    Regime::Strong => {
                        let b = p.strong_block(n);
                        block_size = Some(b);
                        let pi = block_shuffle(n, b, seed)?;
                        if e % p.p_rev == p.r_rev {
                            transform = Transform::Reverse;
                            reverse(&pi)
                        } else {
                            pi
                        }
                    }
                    Regime::Mild => {
                        let b = p.mild_block(n);
                        block_size = Some(b);
                        block_shuffle(n, b, seed)?
                    }
                    _ => {
                        let pi = uniform_permutation(n, seed)?;
                        if e % p.p_eo == p.r_eo {
                            transform = Transform::EvenOdd;
                            even_odd_interleave(&pi)
                        } else {
                            pi
                        }
                    }
                };
                (
                    pi,
                    AprStep {
                        epoch: e,
                        ratio: Some(ratio),
                        regime,
                        block_size,
                        transform,
                    },
                )
            }
        };

        debug_assert!(pi.is_valid());
        self.prev_loss = Some(current_loss);
        self.epoch += 1;
        self.last_step = Some(step);
        Ok(pi)
    }
}
