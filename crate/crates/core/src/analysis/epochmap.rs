use serde::{Deserialize, Serialize};

use super::enumerate::for_each_permutation;
use crate::linalg::{axpy, distance, mean_vector, norm_sq, sub};
use crate::optimize::{run_epoch, run_paired_reversal_epoch};
use crate::problems::{FiniteSum, SmoothnessConstants};
use crate::shuffling::{uniform_permutation, Permutation};
use crate::{Error, Result, Scalar};

/// Cap on `n · d²` for routines that materialize every component Hessian.
pub const MAX_DENSE_WORK: usize = 10_000_000;

/// Largest `n` for which [`permutation_variance`] enumerates all orderings.
pub const MAX_EXHAUSTIVE_EPOCHS: usize = 7;

/// One epoch map evaluated exactly, next to its second-order expansion
/// `w − γ Σ g_i + γ² B_π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMapReport<T> {
    pub t_pi: Vec<T>,
    /// `B_π = Σ_{s<t} H_π(t) g_π(s)`, gradients and Hessians taken at `w`.
    pub b_pi: Vec<T>,
    /// `½ (T_π(w) + T_Rev(π)(w))`
    pub t_bar: Vec<T>,
    /// `‖T_π(w) − (w − γ Σ g_i + γ² B_π)‖`
    pub remainder_norm: T,
    /// `c_rem γ³ n³`, when smoothness constants were supplied.
    pub remainder_bound: Option<T>,
}

impl<T: Scalar> EpochMapReport<T> {
    pub fn remainder_within_bound(&self) -> Option<bool> {
        self.remainder_bound.map(|b| self.remainder_norm <= b)
    }
}

fn check_dense<T: Scalar, P: FiniteSum<T> + ?Sized>(problem: &P, w: &[T]) -> Result<()> {
    if !problem.has_hessian() {
        return Err(Error::Capability("epoch-map algebra needs component Hessians".into()));
    }
    problem.check_point(w)?;
    let (n, d) = (problem.num_components(), problem.dim());
    if n.saturating_mul(d).saturating_mul(d) > MAX_DENSE_WORK {
        return Err(Error::Size(format!(
            "n·d² = {n}·{d}² exceeds the dense Hessian budget of {MAX_DENSE_WORK}"
        )));
    }
    Ok(())
}

fn check_perm<T: Scalar, P: FiniteSum<T> + ?Sized>(problem: &P, pi: &Permutation) -> Result<()> {
    if pi.len() != problem.num_components() {
        return Err(Error::arg(format!(
            "permutation of length {} for a problem with {} components",
            pi.len(),
            problem.num_components()
        )));
    }
    Ok(())
}

/// `B_π(w) = Σ_{1≤s<t≤n} H_π(t)(w) g_π(s)(w)`.
pub fn second_order_term<T: Scalar, P: FiniteSum<T> + ?Sized>(problem: &P, w: &[T], pi: &Permutation) -> Result<Vec<T>> {
    check_dense(problem, w)?;
    check_perm(problem, pi)?;
    let grads = problem.component_gradients(w);
    let d = problem.dim();
    let mut prefix = vec![T::zero(); d];
    let mut out = vec![T::zero(); d];
    for &i in pi.as_slice() {
        let h = problem.component_hessian(i, w)?;
        h.mul_vec_acc(T::one(), &prefix, &mut out);
        axpy(T::one(), &grads[i], &mut prefix);
    }
    Ok(out)
}

/// `Σ_{i≠j} H_i(w) g_j(w)`, the order-free value of `B_π + B_Rev(π)`.
pub fn reversal_pair_sum<T: Scalar, P: FiniteSum<T> + ?Sized>(problem: &P, w: &[T]) -> Result<Vec<T>> {
    check_dense(problem, w)?;
    let grads = problem.component_gradients(w);
    let d = problem.dim();
    // Σ_{j≠i} g_j as (Σ_{j<i} g_j) + (Σ_{j>i} g_j), avoiding the cancellation in (Σ_j g_j) − g_i.
    let mut suffix = vec![vec![T::zero(); d]; grads.len() + 1];
    for i in (0..grads.len()).rev() {
        let mut s = suffix[i + 1].clone();
        axpy(T::one(), &grads[i], &mut s);
        suffix[i] = s;
    }
    let mut prefix = vec![T::zero(); d];
    let mut out = vec![T::zero(); d];
    for (i, g) in grads.iter().enumerate() {
        let mut others = prefix.clone();
        axpy(T::one(), &suffix[i + 1], &mut others);
        problem.component_hessian(i, w)?.mul_vec_acc(T::one(), &others, &mut out);
        axpy(T::one(), g, &mut prefix);
    }
    Ok(out)
}

/// Evaluates `T_π(w)`, `B_π(w)`, `T̄_π(w)` and the size of the third-order
/// remainder at step size `gamma`.
pub fn epoch_map_exact<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    gamma: T,
    constants: Option<&SmoothnessConstants<T>>,
) -> Result<EpochMapReport<T>> {
    let b_pi = second_order_term(problem, w, pi)?;
    let (t_pi, _) = run_epoch(problem, w, pi, gamma, 1)?;
    let t_bar = run_paired_reversal_epoch(problem, w, pi, gamma)?;

    let mut expansion = w.to_vec();
    for g in problem.component_gradients(w) {
        axpy(-gamma, &g, &mut expansion);
    }
    axpy(gamma * gamma, &b_pi, &mut expansion);
    let remainder_norm = distance(&t_pi, &expansion);

    Ok(EpochMapReport {
        t_pi,
        b_pi,
        t_bar,
        remainder_norm,
        remainder_bound: constants.map(|c| c.remainder_bound(gamma, problem.num_components())),
    })
}

fn endpoint<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    gamma: T,
    symmetrized: bool,
) -> Result<Vec<T>> {
    if symmetrized {
        run_paired_reversal_epoch(problem, w, pi, gamma)
    } else {
        run_epoch(problem, w, pi, gamma, 1).map(|(t, _)| t)
    }
}

/// `‖T_π(w) − T_π′(w)‖`, or the same for `T̄` when `symmetrized`.
pub fn order_sensitivity<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    pi_prime: &Permutation,
    gamma: T,
    symmetrized: bool,
) -> Result<T> {
    check_dense(problem, w)?;
    let a = endpoint(problem, w, pi, gamma, symmetrized)?;
    let b = endpoint(problem, w, pi_prime, gamma, symmetrized)?;
    Ok(distance(&a, &b))
}

/// How orderings are drawn for [`permutation_variance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Sampling {
    /// All `n!` orderings (`n ≤ 7`).
    Exhaustive,
    /// Independent uniform orderings from a seeded stream.
    MonteCarlo { samples: usize, seed: u64 },
}

/// `E_π ‖T_π(w) − E_π T_π(w)‖²` over uniform `π` (or the same for `T̄`).
pub fn permutation_variance<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    gamma: T,
    sampling: Sampling,
    symmetrized: bool,
) -> Result<T> {
    check_dense(problem, w)?;
    let n = problem.num_components();
    let mut endpoints = Vec::new();
    match sampling {
        Sampling::Exhaustive => {
            if n > MAX_EXHAUSTIVE_EPOCHS {
                return Err(Error::Size(format!(
                    "exhaustive epoch-map variance is capped at n = {MAX_EXHAUSTIVE_EPOCHS}, got {n}; use Monte Carlo sampling"
                )));
            }
            let mut failure = None;
            for_each_permutation(n, |order| {
                if failure.is_some() {
                    return;
                }
                let pi = Permutation::new(order.to_vec()).expect("enumeration yields bijections");
                match endpoint(problem, w, &pi, gamma, symmetrized) {
                    Ok(t) => endpoints.push(t),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
        }
        Sampling::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::arg("Monte Carlo variance needs at least two samples"));
            }
            for s in 0..samples {
                let pi = uniform_permutation(n, crate::shuffling::seed_for_epoch(seed, s as u64))?;
                endpoints.push(endpoint(problem, w, &pi, gamma, symmetrized)?);
            }
        }
    }
    let mean = mean_vector(&endpoints);
    let total = endpoints.iter().map(|t| norm_sq(&sub(t, &mean))).sum::<T>();
    Ok(total / T::of_usize(endpoints.len()))
}

/// Largest distance from `w` reached by any single-sample iterate during
/// one epoch under each of `perms`. Smoothness constants taken on the ball
/// of this radius around `w` cover every iterate of those epochs.
pub fn trajectory_radius<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    perms: &[Permutation],
    gamma: T,
) -> Result<T> {
    problem.check_point(w)?;
    let mut g = vec![T::zero(); problem.dim()];
    let mut radius = T::zero();
    for pi in perms {
        check_perm(problem, pi)?;
        let mut x = w.to_vec();
        for &i in pi.as_slice() {
            problem.gradient_unchecked(i, &x, &mut g);
            axpy(-gamma, &g, &mut x);
            let r = distance(&x, w);
            if !r.is_finite() {
                return Err(Error::Divergence { step: i });
            }
            radius = radius.max(r);
        }
    }
    Ok(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::all_permutations;
    use crate::problems::{LogisticRegression, Mlp, QuadLin, QuadraticEnsemble};
    use crate::shuffling::reverse;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quadlin_second_order_terms() {
        let p = QuadLin::new(2.0, 3.0, 1.0).unwrap();
        let w = [0.7];
        assert_eq!(second_order_term(&p, &w, &perm(&[0, 1])).unwrap(), vec![0.0]);
        assert_eq!(second_order_term(&p, &w, &perm(&[1, 0])).unwrap(), vec![6.0]);
        assert_eq!(reversal_pair_sum(&p, &w).unwrap(), vec![6.0]);
    }

    #[test]
    fn quadlin_sensitivity_and_variance() {
        let p = QuadLin::new(2.0, 3.0, 1.0).unwrap();
        for k in 3..12 {
            let gamma = (0.5f64).powi(k);
            let s = order_sensitivity(&p, &[1.0], &perm(&[1, 0]), &perm(&[0, 1]), gamma, false).unwrap();
            assert_eq!(s, 6.0 * gamma * gamma);
            let v = permutation_variance(&p, &[1.0], gamma, Sampling::Exhaustive, false).unwrap();
            assert_eq!(v, gamma.powi(4) * 36.0 / 4.0);
            assert_eq!(permutation_variance(&p, &[1.0], gamma, Sampling::Exhaustive, true).unwrap(), 0.0);
        }
    }

    #[test]
    fn same_order_has_zero_sensitivity() {
        let p = QuadraticEnsemble::<f64>::random(4, 2, 1).unwrap();
        let pi = perm(&[2, 0, 3, 1]);
        assert_eq!(order_sensitivity(&p, &[0.1, 0.2], &pi, &pi, 0.01, false).unwrap(), 0.0);
        assert_eq!(order_sensitivity(&p, &[0.1, 0.2], &pi, &pi, 0.01, true).unwrap(), 0.0);
    }

    #[test]
    fn reversal_identity_on_ensembles() {
        for n in 2..=5 {
            let p = QuadraticEnsemble::<f64>::random(n, 3, n as u64).unwrap();
            let w = vec![0.3, -0.2, 0.5];
            let target = reversal_pair_sum(&p, &w).unwrap();
            for pi in all_permutations(n).unwrap() {
                let a = second_order_term(&p, &w, &pi).unwrap();
                let b = second_order_term(&p, &w, &reverse(&pi)).unwrap();
                let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                assert!(distance(&sum, &target) <= 1e-12 * (1.0 + crate::linalg::norm(&target)));
            }
        }
    }

    #[test]
    fn remainder_is_third_order() {
        let p = QuadraticEnsemble::<f64>::random(4, 3, 8).unwrap();
        let w = vec![0.5, 0.1, -0.4];
        let pi = perm(&[3, 1, 0, 2]);
        let ratios: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&g| epoch_map_exact(&p, &w, &pi, g, None).unwrap().remainder_norm / (g * g * g))
            .collect();
        for r in ratios.windows(2) {
            assert!((r[0] / r[1] - 1.0).abs() < 0.1, "{ratios:?}");
        }
    }

    #[test]
    fn remainder_within_supplied_bound() {
        let p = QuadraticEnsemble::<f64>::random(5, 3, 2).unwrap();
        let w = vec![0.2, 0.3, -0.1];
        let perms = all_permutations(5).unwrap();
        for gamma in [0.05, 0.01, 0.001] {
            let radius = trajectory_radius(&p, &w, &perms, gamma).unwrap();
            let c = p.smoothness_on_ball(&w, radius);
            for pi in perms.iter().step_by(7) {
                let r = epoch_map_exact(&p, &w, pi, gamma, Some(&c)).unwrap();
                assert_eq!(r.remainder_within_bound(), Some(true));
            }
        }
    }

    #[test]
    fn monte_carlo_variance_close_to_exhaustive() {
        let p = QuadraticEnsemble::<f64>::random(4, 2, 3).unwrap();
        let w = vec![0.5, -0.5];
        let exact = permutation_variance(&p, &w, 0.05, Sampling::Exhaustive, false).unwrap();
        let mc = permutation_variance(&p, &w, 0.05, Sampling::MonteCarlo { samples: 4000, seed: 1 }, false).unwrap();
        assert!((mc - exact).abs() < 0.15 * exact, "{mc} vs {exact}");
    }

    #[test]
    fn capability_and_size_errors() {
        let mlp = Mlp::<f64>::new(vec![2, 2], vec![1.0, 0.0], &[1.0]).unwrap();
        assert!(matches!(
            second_order_term(&mlp, &vec![0.0; mlp.dim()], &perm(&[0])),
            Err(Error::Capability(_))
        ));
        let big = QuadraticEnsemble::<f64>::random(8, 1, 1).unwrap();
        assert!(matches!(
            permutation_variance(&big, &[0.0], 0.1, Sampling::Exhaustive, false),
            Err(Error::Size(_))
        ));
        let wide = LogisticRegression::<f64>::synthetic(1000, 200, 1, 1e-4).unwrap();
        assert!(matches!(
            reversal_pair_sum(&wide, &vec![0.0; wide.dim()]),
            Err(Error::Size(_))
        ));
    }
}
