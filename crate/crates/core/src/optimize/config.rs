use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamParams<T> {
    fn default() -> Self {
        Self {
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum OptimizerKind<T> {
    Sgd,
    Adam(AdamParams<T>),
}

/// Step-size schedule indexed by epoch: `Constant` keeps `γ0`, `Poly`
/// uses `γ0 / (e + 1)^alpha` in epoch `e` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Schedule<T> {
    Constant,
    Poly { alpha: T },
}

impl<T: Scalar> Schedule<T> {
    pub fn name(&self) -> String {
        match self {
            Schedule::Constant => "constant".into(),
            Schedule::Poly { alpha } => format!("poly:{alpha}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig<T> {
    pub kind: OptimizerKind<T>,
    pub gamma0: T,
    pub schedule: Schedule<T>,
    pub batch_size: usize,
    pub epochs: usize,
}

impl<T: Scalar> OptimizerConfig<T> {
    /// Plain SGD, constant step, batch size 1.
    pub fn sgd(gamma0: T, epochs: usize) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            gamma0,
            schedule: Schedule::Constant,
            batch_size: 1,
            epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > T::zero()) || !self.gamma0.is_finite() {
            return Err(Error::Config(format!("gamma0 must be positive, got {}", self.gamma0)));
        }
        if let Schedule::Poly { alpha } = self.schedule {
            if !(alpha > T::zero()) || !alpha.is_finite() {
                return Err(Error::Config(format!("schedule exponent must be positive, got {alpha}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if let OptimizerKind::Adam(p) = self.kind {
            let unit = |x: T| x >= T::zero() && x < T::one();
            if !unit(p.beta1) || !unit(p.beta2) || !(p.eps > T::zero()) {
                return Err(Error::Config("Adam needs beta1, beta2 in [0, 1) and eps > 0".into()));
            }
        }
        Ok(())
    }

    /// Step size used throughout epoch `e`.
    pub fn step_size(&self, e: usize) -> T {
        match self.schedule {
            Schedule::Constant => self.gamma0,
            Schedule::Poly { alpha } => self.gamma0 / T::of_usize(e + 1).powf(alpha),
        }
    }

    pub fn to_f64(&self) -> OptimizerConfig<f64> {
        let kind = match self.kind {
            OptimizerKind::Sgd => OptimizerKind::Sgd,
            OptimizerKind::Adam(p) => OptimizerKind::Adam(AdamParams {
                beta1: p.beta1.as_f64(),
                beta2: p.beta2.as_f64(),
                eps: p.eps.as_f64(),
            }),
        };
        let schedule = match self.schedule {
            Schedule::Constant => Schedule::Constant,
            Schedule::Poly { alpha } => Schedule::Poly { alpha: alpha.as_f64() },
        };
        OptimizerConfig {
            kind,
            gamma0: self.gamma0.as_f64(),
            schedule,
            batch_size: self.batch_size,
            epochs: self.epochs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_schedule_matches_formula() {
        let cfg = OptimizerConfig {
            schedule: Schedule::Poly { alpha: 0.5 },
            ..OptimizerConfig::sgd(0.3, 100)
        };
        for e in 0..100 {
            let expect = 0.3 / ((e + 1) as f64).sqrt();
            let got = cfg.step_size(e);
            assert!(((got - expect) / expect).abs() <= 1e-15, "epoch {e}: {got} vs {expect}");
        }
        assert_eq!(OptimizerConfig::sgd(0.3, 1).step_size(57), 0.3);
    }

    #[test]
    fn validation() {
        assert!(OptimizerConfig::sgd(0.1, 1).validate().is_ok());
        assert!(OptimizerConfig::sgd(0.0, 1).validate().is_err());
        assert!(OptimizerConfig::sgd(f64::NAN, 1).validate().is_err());
        assert!(OptimizerConfig::sgd(0.1, 0).validate().is_err());
        let bad_batch = OptimizerConfig { batch_size: 0, ..OptimizerConfig::sgd(0.1, 1) };
        assert!(bad_batch.validate().is_err());
        let bad_alpha = OptimizerConfig {
            schedule: Schedule::Poly { alpha: 0.0 },
            ..OptimizerConfig::sgd(0.1, 1)
        };
        assert!(bad_alpha.validate().is_err());
        let bad_adam = OptimizerConfig {
            kind: OptimizerKind::Adam(AdamParams { beta1: 1.0, ..AdamParams::default() }),
            ..OptimizerConfig::sgd(0.1, 1)
        };
        assert!(bad_adam.validate().is_err());
    }
}
