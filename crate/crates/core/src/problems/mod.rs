//! Finite-sum objectives `F(w) = (1/n) Σ f_i(w)`.

mod linear;
mod logistic;
mod mlp;
mod quadlin;
mod quadratic;
mod smoothness;
mod spec;

pub use linear::LinearRegression;
pub use logistic::LogisticRegression;
pub use mlp::Mlp;
pub use quadlin::QuadLin;
pub use quadratic::{QuadComponent, QuadraticEnsemble};
pub use smoothness::SmoothnessConstants;
pub use spec::{make_problem, ProblemSpec};

use crate::linalg::{axpy, Matrix};
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// Evaluation surface of a finite-sum problem.
///
/// Implementors provide the `*_unchecked` methods, which may assume a valid
/// component index and a parameter vector of length [`FiniteSum::dim`]. The
/// provided `component_*` methods validate both and are the public entry
/// points. Problems are immutable once built.
pub trait FiniteSum<T: Scalar>: Send + Sync {
    fn num_components(&self) -> usize;

    fn dim(&self) -> usize;

    fn has_hessian(&self) -> bool {
        false
    }

    fn loss_unchecked(&self, i: usize, w: &[T]) -> T;

    /// Writes `∇f_i(w)` into `out`, overwriting it.
    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]);

    /// Writes `∇f_i(w)` into `out` and returns `f_i(w)`.
    fn loss_and_gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) -> T {
        self.gradient_unchecked(i, w, out);
        self.loss_unchecked(i, w)
    }

    fn hessian_unchecked(&self, _i: usize, _w: &[T]) -> Option<Matrix<T>> {
        None
    }

    /// Starting point for training: independent `N(0, 0.01²)` coordinates.
    fn initial_point(&self, gen: &mut SeededGenerator) -> Vec<T> {
        (0..self.dim())
            .map(|_| T::of(0.01 * gen.next_gaussian()))
            .collect()
    }

    fn check_args(&self, i: usize, w: &[T]) -> Result<()> {
        if i >= self.num_components() {
            return Err(Error::arg(format!(
                "component index {i} out of range (n = {})",
                self.num_components()
            )));
        }
        self.check_point(w)
    }

    fn check_point(&self, w: &[T]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::arg(format!(
                "parameter vector has length {}, expected {}",
                w.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn component_loss(&self, i: usize, w: &[T]) -> Result<T> {
        self.check_args(i, w)?;
        Ok(self.loss_unchecked(i, w))
    }

    fn component_gradient(&self, i: usize, w: &[T]) -> Result<Vec<T>> {
        self.check_args(i, w)?;
        let mut g = vec![T::zero(); self.dim()];
        self.gradient_unchecked(i, w, &mut g);
        Ok(g)
    }

    fn component_hessian(&self, i: usize, w: &[T]) -> Result<Matrix<T>> {
        if !self.has_hessian() {
            return Err(Error::Capability("problem does not provide Hessians".into()));
        }
        self.check_args(i, w)?;
        self.hessian_unchecked(i, w)
            .ok_or_else(|| Error::Capability("Hessian unavailable".into()))
    }

    /// `F(w)`. Panics if `w` has the wrong length.
    fn full_loss(&self, w: &[T]) -> T {
        assert_eq!(w.len(), self.dim(), "parameter dimension mismatch");
        let n = self.num_components();
        (0..n).map(|i| self.loss_unchecked(i, w)).sum::<T>() / T::of_usize(n)
    }

    /// `∇F(w)`. Panics if `w` has the wrong length.
    fn full_gradient(&self, w: &[T]) -> Vec<T> {
        assert_eq!(w.len(), self.dim(), "parameter dimension mismatch");
        let n = self.num_components();
        let mut acc = vec![T::zero(); self.dim()];
        let mut g = vec![T::zero(); self.dim()];
        for i in 0..n {
            self.gradient_unchecked(i, w, &mut g);
            axpy(T::one(), &g, &mut acc);
        }
        let inv = T::one() / T::of_usize(n);
        acc.iter_mut().for_each(|x| *x = *x * inv);
        acc
    }

    /// All component gradients at `w`, indexed by component.
    fn component_gradients(&self, w: &[T]) -> Vec<Vec<T>> {
        assert_eq!(w.len(), self.dim(), "parameter dimension mismatch");
        (0..self.num_components())
            .map(|i| {
                let mut g = vec![T::zero(); self.dim()];
                self.gradient_unchecked(i, w, &mut g);
                g
            })
            .collect()
    }
}

impl<T: Scalar, P: FiniteSum<T> + ?Sized> FiniteSum<T> for Box<P> {
    fn num_components(&self) -> usize {
        (**self).num_components()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn has_hessian(&self) -> bool {
        (**self).has_hessian()
    }
    fn loss_unchecked(&self, i: usize, w: &[T]) -> T {
        (**self).loss_unchecked(i, w)
    }
    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        (**self).gradient_unchecked(i, w, out)
    }
    fn loss_and_gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) -> T {
        (**self).loss_and_gradient_unchecked(i, w, out)
    }
    fn hessian_unchecked(&self, i: usize, w: &[T]) -> Option<Matrix<T>> {
        (**self).hessian_unchecked(i, w)
    }
    fn initial_point(&self, gen: &mut SeededGenerator) -> Vec<T> {
        (**self).initial_point(gen)
    }
}

/// Numerically stable `ln(1 + e^t)`.
pub(crate) fn softplus<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^{-t})`, stable for large `|t|`.
pub(crate) fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// Dense row-major sample matrix converted from `f64` data.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Design<T> {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) values: Vec<T>,
}

impl<T: Scalar> Design<T> {
    pub(crate) fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self {
            rows,
            cols,
            values: values.iter().map(|&x| T::of(x)).collect(),
        }
    }

    pub(crate) fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}
