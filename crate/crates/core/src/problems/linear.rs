use super::{Design, FiniteSum};
use crate::data::Dataset;
use crate::linalg::Matrix;
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// Squared-error regression with an intercept:
/// `f_i(w) = (x̃_iᵀw − y_i)² + (λ/2)‖w‖²`, `x̃_i = (x_i, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegression<T> {
    x: Design<T>,
    y: Vec<T>,
    lambda: T,
}

impl<T: Scalar> LinearRegression<T> {
    pub fn new(x: Vec<f64>, n_features: usize, y: Vec<f64>, lambda: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::arg("linear regression needs at least one sample"));
        }
        if x.len() != y.len() * n_features {
            return Err(Error::arg("feature matrix shape does not match target count"));
        }
        if !(lambda >= 0.0) {
            return Err(Error::arg("regularization must be non-negative"));
        }
        Ok(Self {
            x: Design::from_f64(y.len(), n_features, &x),
            y: y.into_iter().map(T::of).collect(),
            lambda: T::of(lambda),
        })
    }

    pub fn from_dataset(ds: &Dataset, lambda: f64) -> Result<Self> {
        Self::new(ds.to_dense(), ds.n_features(), ds.labels().to_vec(), lambda)
    }

    /// Gaussian features, targets from a random linear map plus `noise`-scaled
    /// Gaussian noise.
    pub fn synthetic(n: usize, d: usize, seed: u64, noise: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::arg("synthetic regression needs n, d >= 1"));
        }
        let mut g = SeededGenerator::new(seed);
        let truth: Vec<f64> = (0..=d).map(|_| g.next_gaussian()).collect();
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| g.next_gaussian()).collect();
            let t = row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + truth[d];
            y.push(t + noise * g.next_gaussian());
            x.extend(row);
        }
        Self::new(x, d, y, 0.0)
    }

    fn residual(&self, i: usize, w: &[T]) -> T {
        let d = self.x.cols;
        self.x
            .row(i)
            .iter()
            .zip(&w[..d])
            .fold(w[d], |acc, (&a, &b)| acc + a * b)
            - self.y[i]
    }

    fn penalty(&self, w: &[T]) -> T {
        self.lambda * w.iter().fold(T::zero(), |acc, &v| acc + v * v) / T::of(2.0)
    }
}

impl<T: Scalar> FiniteSum<T> for LinearRegression<T> {
    fn num_components(&self) -> usize {
        self.x.rows
    }

    fn dim(&self) -> usize {
        self.x.cols + 1
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn loss_unchecked(&self, i: usize, w: &[T]) -> T {
        let r = self.residual(i, w);
        r * r + self.penalty(w)
    }

    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        let coef = T::of(2.0) * self.residual(i, w);
        let d = self.x.cols;
        for (k, (o, &xk)) in out[..d].iter_mut().zip(self.x.row(i)).enumerate() {
            *o = coef * xk + self.lambda * w[k];
        }
        out[d] = coef + self.lambda * w[d];
    }

    fn hessian_unchecked(&self, i: usize, _w: &[T]) -> Option<Matrix<T>> {
        let mut xt = self.x.row(i).to_vec();
        xt.push(T::one());
        let mut h = Matrix::outer(T::of(2.0), &xt);
        h.add_diagonal(self.lambda);
        Some(h)
    }
}
