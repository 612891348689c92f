use super::{sigmoid, softplus, Design, FiniteSum};
use crate::data::Dataset;
use crate::linalg::Matrix;
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

pub const DEFAULT_L2: f64 = 1e-4;

/// Regularized log-loss with an intercept:
/// `f_i(w) = ln(1 + exp(−y_i·x̃_iᵀw)) + (λ/2)‖w‖²`, where `x̃_i = (x_i, 1)`
/// and `y_i ∈ {−1, +1}`. The intercept is regularized too.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression<T> {
    x: Design<T>,
    y: Vec<T>,
    lambda: T,
}

impl<T: Scalar> LogisticRegression<T> {
    pub fn new(x: Vec<f64>, n_features: usize, y: Vec<f64>, lambda: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::arg("logistic regression needs at least one sample"));
        }
        if x.len() != y.len() * n_features {
            return Err(Error::arg("feature matrix shape does not match label count"));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::arg(format!("classification labels must be -1/+1, got {bad}")));
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

    /// Gaussian features, labels from a noisy linear rule.
    pub fn synthetic(n: usize, d: usize, seed: u64, lambda: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::arg("synthetic logistic problem needs n, d >= 1"));
        }
        let mut g = SeededGenerator::new(seed);
        let truth: Vec<f64> = (0..d).map(|_| g.next_gaussian()).collect();
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| g.next_gaussian()).collect();
            let margin: f64 = row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + g.next_gaussian();
            y.push(if margin > 0.0 { 1.0 } else { -1.0 });
            x.extend(row);
        }
        Self::new(x, d, y, lambda)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    fn margin(&self, i: usize, w: &[T]) -> T {
        let row = self.x.row(i);
        let d = self.x.cols;
        let z = row.iter().zip(&w[..d]).fold(w[d], |acc, (&a, &b)| acc + a * b);
        self.y[i] * z
    }

    fn penalty(&self, w: &[T]) -> T {
        self.lambda * w.iter().fold(T::zero(), |acc, &v| acc + v * v) / T::of(2.0)
    }

    fn write_gradient(&self, i: usize, w: &[T], m: T, out: &mut [T]) {
        let coef = -self.y[i] * sigmoid(-m);
        let d = self.x.cols;
        for (k, (o, &xk)) in out[..d].iter_mut().zip(self.x.row(i)).enumerate() {
            *o = coef * xk + self.lambda * w[k];
        }
        out[d] = coef + self.lambda * w[d];
    }
}

impl<T: Scalar> FiniteSum<T> for LogisticRegression<T> {
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
        softplus(-self.margin(i, w)) + self.penalty(w)
    }

    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        let m = self.margin(i, w);
        self.write_gradient(i, w, m, out);
    }

    fn loss_and_gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) -> T {
        let m = self.margin(i, w);
        self.write_gradient(i, w, m, out);
        softplus(-m) + self.penalty(w)
    }

    fn hessian_unchecked(&self, i: usize, w: &[T]) -> Option<Matrix<T>> {
        let m = self.margin(i, w);
        let s = sigmoid(m) * sigmoid(-m);
        let mut xt = self.x.row(i).to_vec();
        xt.push(T::one());
        let mut h = Matrix::outer(s, &xt);
        h.add_diagonal(self.lambda);
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::*;

    fn toy() -> LogisticRegression<f64> {
        LogisticRegression::new(
            vec![1.0, 0.5, -0.3, 2.0, 0.7, -1.1, -2.0, 0.1],
            2,
            vec![1.0, -1.0, 1.0, -1.0],
            DEFAULT_L2,
        )
        .unwrap()
    }

    #[test]
    fn balanced_loss_at_origin() {
        let p = toy();
        assert_eq!(p.num_components(), 4);
        let w = vec![0.0; 3];
        for i in 0..4 {
            assert!((p.component_loss(i, &w).unwrap() - std::f64::consts::LN_2).abs() <= 1e-15);
        }
        assert!((p.full_loss(&w) - std::f64::consts::LN_2).abs() <= 1e-15);
    }

    #[test]
    fn finite_difference_checks() {
        let p = LogisticRegression::<f64>::synthetic(30, 4, 2, DEFAULT_L2).unwrap();
        assert!(worst_gradient_error(&p, 5, 20) <= 1e-5);
        assert!(mean_gradient_gap(&p, 6) <= 1e-12);
        let single = LogisticRegression::<f64>::new(vec![0.4, -1.2], 2, vec![1.0], DEFAULT_L2).unwrap();
        assert!(worst_hessian_error(&single, 7, 10, 1e-5) <= 1e-6);
        assert!(single.component_hessian(0, &[0.1, 0.2, 0.3]).unwrap().asymmetry() <= 1e-12);
    }

    #[test]
    fn full_loss_is_component_mean() {
        let p = LogisticRegression::<f64>::synthetic(17, 3, 9, DEFAULT_L2).unwrap();
        let w = vec![0.3, -0.4, 1.2, 0.05];
        let mut sum = 0.0;
        for i in 0..17 {
            sum += p.component_loss(i, &w).unwrap();
        }
        let oracle = sum / 17.0;
        assert!((p.full_loss(&w) - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let p = LogisticRegression::<f64>::new(vec![1.0], 1, vec![1.0], 0.0).unwrap();
        assert!(p.component_loss(0, &[-1e4, 0.0]).unwrap().is_finite());
        assert!(p.component_gradient(0, &[1e4, 0.0]).unwrap().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn rejects_non_binary_labels() {
        assert!(LogisticRegression::<f64>::new(vec![1.0], 1, vec![2.0], 0.0).is_err());
    }
}
