use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Gradient Lipschitz constant `L`, gradient bound `G`, Hessian Lipschitz
/// constant `rho`, and the derived remainder constant
/// `c_rem = rho·G²/2 + L²·G/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants<T> {
    l: T,
    g: T,
    rho: T,
    c_rem: T,
}

impl<T: Scalar> SmoothnessConstants<T> {
    pub fn new(l: T, g: T, rho: T) -> Result<Self> {
        if !(l >= T::zero() && g >= T::zero() && rho >= T::zero()) {
            return Err(Error::arg("smoothness constants must be non-negative"));
        }
        let two = T::of(2.0);
        let c_rem = rho * g * g / two + l * l * g / two;
        Ok(Self { l, g, rho, c_rem })
    }

    pub fn lipschitz(&self) -> T {
        self.l
    }

    pub fn gradient_bound(&self) -> T {
        self.g
    }

    pub fn hessian_lipschitz(&self) -> T {
        self.rho
    }

    pub fn c_rem(&self) -> T {
        self.c_rem
    }

    /// `c_rem · γ³ · n³`
    pub fn remainder_bound(&self, gamma: T, n: usize) -> T {
        let n = T::of_usize(n);
        self.c_rem * gamma.powi(3) * n.powi(3)
    }

    /// `L·G·γ²·n(n−1) + 2·c_rem·γ³·n³`
    pub fn order_sensitivity_bound(&self, gamma: T, n: usize) -> T {
        let nn = T::of_usize(n);
        self.l * self.g * gamma * gamma * nn * (nn - T::one())
            + T::of(2.0) * self.remainder_bound(gamma, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remainder_constant() {
        let c = SmoothnessConstants::new(2.0, 3.0, 4.0).unwrap();
        assert_eq!(c.c_rem(), 4.0 * 9.0 / 2.0 + 4.0 * 3.0 / 2.0);
        let again = SmoothnessConstants::new(c.lipschitz(), c.gradient_bound(), c.hessian_lipschitz()).unwrap();
        assert_eq!(again.c_rem(), c.c_rem());
        assert_eq!(c.remainder_bound(0.5, 2), c.c_rem());
    }

    #[test]
    fn negative_rejected() {
        assert!(SmoothnessConstants::new(-1.0, 0.0, 0.0).is_err());
        assert!(SmoothnessConstants::new(1.0, f64::NAN, 0.0).is_err());
    }
}
