use super::{FiniteSum, SmoothnessConstants};
use crate::linalg::Matrix;
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// Two one-dimensional components, `f_1(x) = (a/2)·x²` and `f_2(x) = b·x`.
///
/// The smallest instance on which the epoch map depends on the visiting
/// order at second order in the step size:
/// `T_(1,2)(w) = (1 − γa)w − γb` and `T_(2,1)(w) = T_(1,2)(w) + γ²ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadLin<T> {
    a: T,
    b: T,
    start: T,
}

impl<T: Scalar> QuadLin<T> {
    pub fn new(a: T, b: T, start: T) -> Result<Self> {
        if a == T::zero() || b == T::zero() || start == T::zero() {
            return Err(Error::arg("QuadLin requires nonzero a, b and start point"));
        }
        if !(a.is_finite() && b.is_finite() && start.is_finite()) {
            return Err(Error::arg("QuadLin parameters must be finite"));
        }
        Ok(Self { a, b, start })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn start(&self) -> T {
        self.start
    }

    /// Constants valid on the ball of the given radius around `center`:
    /// `L = |a|`, `rho = 0`, `G = max(|a|·(|center| + radius), |b|)`.
    pub fn smoothness_on_ball(&self, center: T, radius: T) -> SmoothnessConstants<T> {
        let g = (self.a.abs() * (center.abs() + radius)).max(self.b.abs());
        SmoothnessConstants::new(self.a.abs(), g, T::zero()).expect("non-negative by construction")
    }
}

impl<T: Scalar> FiniteSum<T> for QuadLin<T> {
    fn num_components(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        1
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn loss_unchecked(&self, i: usize, w: &[T]) -> T {
        match i {
            0 => self.a * w[0] * w[0] / T::of(2.0),
            _ => self.b * w[0],
        }
    }

    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        out[0] = match i {
            0 => self.a * w[0],
            _ => self.b,
        };
    }

    fn hessian_unchecked(&self, i: usize, _w: &[T]) -> Option<Matrix<T>> {
        let h = if i == 0 { self.a } else { T::zero() };
        Some(Matrix::from_row_major(1, 1, vec![h]))
    }

    fn initial_point(&self, _gen: &mut SeededGenerator) -> Vec<T> {
        vec![self.start]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let p = QuadLin::new(2.0, 3.0, 1.0).unwrap();
        assert_eq!(p.component_gradient(0, &[1.0]).unwrap(), vec![2.0]);
        assert_eq!(p.component_gradient(1, &[1.0]).unwrap(), vec![3.0]);
        for w in [-3.0, 0.5, 7.0] {
            assert_eq!(p.component_gradient(0, &[w]).unwrap(), vec![2.0 * w]);
            assert_eq!(p.component_gradient(1, &[w]).unwrap(), vec![3.0]);
            assert_eq!(p.component_hessian(0, &[w]).unwrap().as_slice(), &[2.0]);
            assert_eq!(p.component_hessian(1, &[w]).unwrap().as_slice(), &[0.0]);
        }
        assert_eq!(p.full_loss(&[0.0]), 0.0);
    }

    #[test]
    fn degenerate_instances_rejected() {
        assert!(QuadLin::new(0.0, 1.0, 1.0).is_err());
        assert!(QuadLin::new(1.0, 0.0, 1.0).is_err());
        assert!(QuadLin::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn index_out_of_range() {
        let p = QuadLin::new(2.0, 3.0, 1.0).unwrap();
        assert!(matches!(p.component_gradient(2, &[1.0]), Err(Error::Argument(_))));
        assert!(matches!(p.component_gradient(0, &[1.0, 2.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn single_precision_instance() {
        let p = QuadLin::<f32>::new(2.0, 3.0, 1.0).unwrap();
        assert_eq!(p.component_gradient(0, &[1.5]).unwrap(), vec![3.0f32]);
    }
}
