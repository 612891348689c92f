use super::{FiniteSum, SmoothnessConstants};
use crate::linalg::{dot, norm, Matrix};
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// `f(w) = ½ wᵀAw + bᵀw` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadComponent<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
}

/// A finite sum of quadratic components. Hessians are exact and constant,
/// so the Hessian-Lipschitz constant is zero.
///
/// Each component may carry a constant offset added to its loss; it changes
/// no gradient or Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticEnsemble<T> {
    dim: usize,
    components: Vec<QuadComponent<T>>,
    offsets: Vec<T>,
}

impl<T: Scalar> QuadraticEnsemble<T> {
    pub fn new(components: Vec<QuadComponent<T>>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::arg("quadratic ensemble needs at least one component"))?;
        let dim = first.b.len();
        if dim == 0 {
            return Err(Error::arg("quadratic ensemble needs d >= 1"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.a.rows() != dim || c.a.cols() != dim || c.b.len() != dim {
                return Err(Error::arg(format!("component {i} has inconsistent shape")));
            }
            if c.a.asymmetry() > T::zero() {
                return Err(Error::arg(format!("component {i} has a non-symmetric matrix")));
            }
        }
        let offsets = vec![T::zero(); components.len()];
        Ok(Self { dim, components, offsets })
    }

    /// Shifts every component so that its minimum value is zero, making the
    /// objective non-negative. Every `A_i` must be positive definite.
    pub fn with_zero_minimum(mut self) -> Result<Self> {
        for (i, c) in self.components.iter().enumerate() {
            let x = cholesky_solve(&c.a, &c.b)
                .ok_or_else(|| Error::arg(format!("component {i} is not positive definite")))?;
            self.offsets[i] = dot(&c.b, &x) / T::of(2.0);
        }
        Ok(self)
    }

    /// Random ensemble: `A_i = M Mᵀ/d + 0.1·I` with Gaussian `M`, Gaussian `b_i`.
    /// All components are strongly convex and shifted to a minimum of zero.
    pub fn random(n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::arg("random quadratic ensemble needs n, d >= 1"));
        }
        let mut g = SeededGenerator::new(seed);
        let components = (0..n)
            .map(|_| {
                let m: Vec<f64> = (0..d * d).map(|_| g.next_gaussian()).collect();
                let mut a = Matrix::zeros(d, d);
                for r in 0..d {
                    for c in 0..=r {
                        let v = (0..d).map(|k| m[r * d + k] * m[c * d + k]).sum::<f64>() / d as f64;
                        a[(r, c)] = T::of(v);
                        a[(c, r)] = T::of(v);
                    }
                }
                a.add_diagonal(T::of(0.1));
                let b = (0..d).map(|_| T::of(g.next_gaussian())).collect();
                QuadComponent { a, b }
            })
            .collect();
        Self::new(components)?.with_zero_minimum()
    }

    pub fn components(&self) -> &[QuadComponent<T>] {
        &self.components
    }

    /// Constants valid on the ball `{x : ‖x − center‖ ≤ radius}`:
    /// `L = max_i ‖A_i‖` (via [`Matrix::spectral_norm_bound`]), `rho = 0`,
    /// `G = max_i (‖A_i·center + b_i‖ + ‖A_i‖·radius)`.
    pub fn smoothness_on_ball(&self, center: &[T], radius: T) -> SmoothnessConstants<T> {
        let mut l = T::zero();
        let mut g = T::zero();
        for c in &self.components {
            let op = c.a.spectral_norm_bound();
            let mut grad = c.a.mul_vec(center);
            grad.iter_mut().zip(&c.b).for_each(|(x, &bi)| *x = *x + bi);
            l = l.max(op);
            g = g.max(norm(&grad) + op * radius);
        }
        SmoothnessConstants::new(l, g, T::zero()).expect("non-negative by construction")
    }
}

impl<T: Scalar> FiniteSum<T> for QuadraticEnsemble<T> {
    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn loss_unchecked(&self, i: usize, w: &[T]) -> T {
        let c = &self.components[i];
        dot(w, &c.a.mul_vec(w)) / T::of(2.0) + dot(&c.b, w) + self.offsets[i]
    }

    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        let c = &self.components[i];
        out.copy_from_slice(&c.b);
        c.a.mul_vec_acc(T::one(), w, out);
    }

    fn hessian_unchecked(&self, i: usize, _w: &[T]) -> Option<Matrix<T>> {
        Some(self.components[i].a.clone())
    }
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` otherwise.
fn cholesky_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag = diag - l[(j, k)] * l[(j, k)];
        }
        if !(diag > T::zero()) {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v = v - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[(i, k)] * y[k];
        }
        y[i] = y[i] / l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[(k, i)] * y[k];
        }
        y[i] = y[i] / l[(i, i)];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::*;

    #[test]
    fn gradients_match_finite_differences() {
        let p = QuadraticEnsemble::<f64>::random(5, 4, 3).unwrap();
        assert!(worst_gradient_error(&p, 1, 20) <= 1e-5);
        assert!(mean_gradient_gap(&p, 2) <= 1e-12);
    }

    #[test]
    fn hessians_are_symmetric_and_constant() {
        let p = QuadraticEnsemble::<f64>::random(3, 5, 8).unwrap();
        for i in 0..3 {
            let h0 = p.component_hessian(i, &[0.0; 5]).unwrap();
            let h1 = p.component_hessian(i, &[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap();
            assert!(h0.asymmetry() <= 1e-12);
            assert_eq!(h0, h1);
        }
        assert!(worst_hessian_error(&p, 4, 5, 1e-5) <= 1e-6);
    }

    #[test]
    fn random_components_bottom_out_at_zero() {
        let p = QuadraticEnsemble::<f64>::random(4, 3, 21).unwrap();
        let mut g = SeededGenerator::new(1);
        for (i, c) in p.components().iter().enumerate() {
            let xstar: Vec<f64> = cholesky_solve(&c.a, &c.b).unwrap().iter().map(|v| -v).collect();
            assert!(p.component_gradient(i, &xstar).unwrap().iter().all(|v| v.abs() <= 1e-10));
            assert!(p.component_loss(i, &xstar).unwrap().abs() <= 1e-10);
            for _ in 0..20 {
                let w: Vec<f64> = (0..3).map(|_| 5.0 * g.next_gaussian()).collect();
                assert!(p.component_loss(i, &w).unwrap() >= 0.0);
            }
        }
        let indefinite = QuadComponent { a: Matrix::from_row_major(1, 1, vec![-1.0]), b: vec![1.0] };
        assert!(QuadraticEnsemble::new(vec![indefinite]).unwrap().with_zero_minimum().is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(QuadraticEnsemble::<f64>::new(vec![]).is_err());
        let bad = QuadComponent {
            a: Matrix::from_row_major(2, 2, vec![1.0, 2.0, 0.0, 1.0]),
            b: vec![0.0, 0.0],
        };
        assert!(QuadraticEnsemble::new(vec![bad]).is_err());
    }

    #[test]
    fn smoothness_bounds_gradients_on_ball() {
        let p = QuadraticEnsemble::<f64>::random(4, 3, 21).unwrap();
        let center = vec![0.3, -0.2, 1.0];
        let c = p.smoothness_on_ball(&center, 0.5);
        let mut g = SeededGenerator::new(0);
        for _ in 0..200 {
            let dir: Vec<f64> = (0..3).map(|_| g.next_gaussian()).collect();
            let r = 0.5 * g.next_f64() / norm(&dir);
            let x: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + r * d).collect();
            for i in 0..4 {
                assert!(norm(&p.component_gradient(i, &x).unwrap()) <= c.gradient_bound());
            }
        }
        assert_eq!(c.hessian_lipschitz(), 0.0);
    }
}
