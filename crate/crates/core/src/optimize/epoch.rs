use super::config::AdamParams;
use crate::linalg::{axpy, is_finite, norm_sq};
use crate::problems::FiniteSum;
use crate::shuffling::{reverse, Permutation};
use crate::{Error, Result, Scalar};

/// Iterates whose norm exceeds this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

fn check_epoch_args<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    gamma: T,
    batch_size: usize,
) -> Result<()> {
    problem.check_point(w)?;
    if pi.len() != problem.num_components() {
        return Err(Error::arg(format!(
            "permutation of length {} for a problem with {} components",
            pi.len(),
            problem.num_components()
        )));
    }
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::arg(format!("step size must be finite and non-negative, got {gamma}")));
    }
    if batch_size == 0 {
        return Err(Error::arg("batch_size must be at least 1"));
    }
    Ok(())
}

fn check_iterate<T: Scalar>(w: &[T], step: usize) -> Result<()> {
    if !is_finite(w) || norm_sq(w).as_f64() > DIVERGENCE_NORM * DIVERGENCE_NORM {
        return Err(Error::Divergence { step });
    }
    Ok(())
}

/// Walks `pi` in consecutive chunks of `batch_size`, calling `update` with
/// the averaged chunk gradient after each chunk. Within a chunk, gradients
/// are summed in ascending index order so that the batch gradient does not
/// depend on how the permutation arranged the chunk. Returns the mean of
/// the per-sample losses, each evaluated at its pre-step iterate.
fn drive_epoch<T, P, U>(problem: &P, w: &mut [T], pi: &Permutation, batch_size: usize, mut update: U) -> Result<T>
where
    T: Scalar,
    P: FiniteSum<T> + ?Sized,
    U: FnMut(&mut [T], &[T]),
{
    let d = problem.dim();
    let mut g = vec![T::zero(); d];
    let mut acc = vec![T::zero(); d];
    let mut chunk_sorted = Vec::with_capacity(batch_size);
    let mut loss_sum = T::zero();

    for (step, chunk) in pi.as_slice().chunks(batch_size).enumerate() {
        let step = step + 1;
        let chunk_loss = if let [i] = chunk {
            problem.loss_and_gradient_unchecked(*i, w, &mut acc)
        } else {
            chunk_sorted.clear();
            chunk_sorted.extend_from_slice(chunk);
            chunk_sorted.sort_unstable();
            acc.iter_mut().for_each(|x| *x = T::zero());
            let mut sum = T::zero();
            for &i in &chunk_sorted {
                sum = sum + problem.loss_and_gradient_unchecked(i, w, &mut g);
                axpy(T::one(), &g, &mut acc);
            }
            let inv = T::one() / T::of_usize(chunk.len());
            acc.iter_mut().for_each(|x| *x = *x * inv);
            sum
        };
        if !chunk_loss.is_finite() {
            return Err(Error::Divergence { step });
        }
        loss_sum = loss_sum + chunk_loss;
        update(w, &acc);
        check_iterate(w, step)?;
    }
    Ok(loss_sum / T::of_usize(pi.len()))
}

/// One SGD epoch over the order `pi`: `w ← w − γ · (mean gradient of the
/// chunk)` for consecutive chunks of `batch_size` samples. With
/// `batch_size = 1` this is the sequential epoch map `T_π(w)`.
///
/// Returns the endpoint and the mean pre-step sample loss.
pub fn run_epoch<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    gamma: T,
    batch_size: usize,
) -> Result<(Vec<T>, T)> {
    check_epoch_args(problem, w, pi, gamma, batch_size)?;
    let mut w = w.to_vec();
    let loss = drive_epoch(problem, &mut w, pi, batch_size, |w, g| axpy(-gamma, g, w))?;
    Ok((w, loss))
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    params: AdamParams<T>,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(dim: usize, params: AdamParams<T>) -> Self {
        Self {
            params,
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }

    pub fn params(&self) -> &AdamParams<T> {
        &self.params
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[T] {
        &self.m
    }

    pub fn second_moment(&self) -> &[T] {
        &self.v
    }

    fn apply(&mut self, w: &mut [T], g: &[T], gamma: T) {
        let AdamParams { beta1, beta2, eps } = self.params;
        self.t += 1;
        let c1 = T::one() - beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let c2 = T::one() - beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for k in 0..w.len() {
            self.m[k] = beta1 * self.m[k] + (T::one() - beta1) * g[k];
            self.v[k] = beta2 * self.v[k] + (T::one() - beta2) * g[k] * g[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            w[k] = w[k] - gamma * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// One Adam epoch: a bias-corrected moment update per chunk of `pi`.
pub fn run_adam_epoch<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    mut state: AdamState<T>,
    pi: &Permutation,
    gamma: T,
    batch_size: usize,
) -> Result<(Vec<T>, AdamState<T>, T)> {
    check_epoch_args(problem, w, pi, gamma, batch_size)?;
    if state.m.len() != w.len() {
        return Err(Error::arg("Adam state dimension does not match the parameter vector"));
    }
    let mut w = w.to_vec();
    let loss = drive_epoch(problem, &mut w, pi, batch_size, |w, g| state.apply(w, g, gamma))?;
    Ok((w, state, loss))
}

/// The symmetrized epoch map `½ (T_π(w) + T_Rev(π)(w))`: two independent
/// single-sample epochs from the same start, averaged.
pub fn run_paired_reversal_epoch<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    pi: &Permutation,
    gamma: T,
) -> Result<Vec<T>> {
    let (forward, _) = run_epoch(problem, w, pi, gamma, 1)?;
    let (backward, _) = run_epoch(problem, w, &reverse(pi), gamma, 1)?;
    let half = T::of(0.5);
    Ok(forward.iter().zip(&backward).map(|(a, b)| (*a + *b) * half).collect())
}
