use serde::{Deserialize, Serialize};

use super::enumerate::for_each_permutation;
use crate::linalg::{axpy, mean_vector, norm_sq, sub};
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// `(1/m) Σ ‖X_i − X̄‖²`
pub fn population_variance<T: Scalar>(vectors: &[Vec<T>]) -> T {
    if vectors.is_empty() {
        return T::zero();
    }
    let mean = mean_vector(vectors);
    vectors.iter().map(|x| norm_sq(&sub(x, &mean))).sum::<T>() / T::of_usize(vectors.len())
}

/// Second moment of the mean of a uniformly random size-`k` prefix around
/// the population mean: `(m − k) / (k (m − 1)) · σ²`.
pub fn prefix_closed_form<T: Scalar>(m: usize, k: usize, sigma2: T) -> T {
    if k >= m {
        return T::zero();
    }
    T::of_usize(m - k) / (T::of_usize(k) * T::of_usize(m - 1)) * sigma2
}

fn check_prefix_args<T>(vectors: &[Vec<T>], k: usize) -> Result<()> {
    let m = vectors.len();
    if k == 0 || k > m {
        return Err(Error::arg(format!("prefix length {k} outside 1..={m}")));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|x| x.len() != d) {
        return Err(Error::arg("population vectors have different lengths"));
    }
    Ok(())
}

/// Exact prefix statistics over all `m!` orderings: the mean of
/// `‖X̄_π^(k) − X̄‖²` and the mean of the prefix mean `X̄_π^(k)` itself.
pub fn prefix_moments_exhaustive<T: Scalar>(vectors: &[Vec<T>], k: usize) -> Result<(T, Vec<T>)> {
    check_prefix_args(vectors, k)?;
    let m = vectors.len();
    let d = vectors[0].len();
    let mean = mean_vector(vectors);
    let inv_k = T::one() / T::of_usize(k);

    let mut second = T::zero();
    let mut mean_of_prefix = vec![T::zero(); d];
    let mut prefix = vec![T::zero(); d];
    let mut count = 0usize;
    for_each_permutation(m, |order| {
        prefix.iter_mut().for_each(|x| *x = T::zero());
        for &i in &order[..k] {
            axpy(inv_k, &vectors[i], &mut prefix);
        }
        axpy(T::one(), &prefix, &mut mean_of_prefix);
        if k < m {
            second = second + norm_sq(&sub(&prefix, &mean));
        }
        count += 1;
    })?;
    let inv = T::one() / T::of_usize(count);
    mean_of_prefix.iter_mut().for_each(|x| *x = *x * inv);
    Ok((second * inv, mean_of_prefix))
}

/// Exact `E‖X̄_π^(k) − X̄‖²` by enumerating all orderings (`m ≤ 8`).
/// `k = m` gives zero exactly.
pub fn prefix_second_moment_exhaustive<T: Scalar>(vectors: &[Vec<T>], k: usize) -> Result<T> {
    prefix_moments_exhaustive(vectors, k).map(|(s, _)| s)
}

/// Monte Carlo estimate of `E‖X̄_π^(k) − X̄‖²` with its standard error.
pub fn prefix_second_moment_mc<T: Scalar>(vectors: &[Vec<T>], k: usize, samples: usize, seed: u64) -> Result<(T, T)> {
    check_prefix_args(vectors, k)?;
    if samples < 100 {
        return Err(Error::arg(format!("Monte Carlo needs at least 100 samples, got {samples}")));
    }
    let m = vectors.len();
    if k == m {
        return Ok((T::zero(), T::zero()));
    }
    let d = vectors[0].len();
    let mean = mean_vector(vectors);
    let inv_k = T::one() / T::of_usize(k);
    let mut gen = SeededGenerator::new(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut prefix = vec![T::zero(); d];
    let (mut sum, mut sum_sq) = (T::zero(), T::zero());
    for _ in 0..samples {
        // Partial Fisher–Yates: only the first k positions are needed.
        for t in 0..k {
            let j = t + gen.below_unchecked((m - t) as u64) as usize;
            order.swap(t, j);
        }
        prefix.iter_mut().for_each(|x| *x = T::zero());
        for &i in &order[..k] {
            axpy(inv_k, &vectors[i], &mut prefix);
        }
        let v = norm_sq(&sub(&prefix, &mean));
        sum = sum + v;
        sum_sq = sum_sq + v * v;
    }
    let s = T::of_usize(samples);
    let est = sum / s;
    let var = ((sum_sq / s - est * est) * s / (s - T::one())).max(T::zero());
    Ok((est, (var / s).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum PrefixMode {
    Exhaustive,
    MonteCarlo { samples: usize },
}

/// Measured prefix second moment next to its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixVarianceCheck<T> {
    pub m: usize,
    pub k: usize,
    pub value: T,
    /// Standard error of `value`; zero for exhaustive checks.
    pub stderr: T,
    pub closed_form: T,
    pub mode: PrefixMode,
}

impl<T: Scalar> PrefixVarianceCheck<T> {
    /// `|value − closed_form| / max(closed_form, tiny)`.
    pub fn relative_error(&self) -> T {
        (self.value - self.closed_form).abs() / self.closed_form.max(T::min_positive_value())
    }
}

pub fn check_prefix_exhaustive<T: Scalar>(vectors: &[Vec<T>], k: usize) -> Result<PrefixVarianceCheck<T>> {
    let value = prefix_second_moment_exhaustive(vectors, k)?;
    Ok(PrefixVarianceCheck {
        m: vectors.len(),
        k,
        value,
        stderr: T::zero(),
        closed_form: prefix_closed_form(vectors.len(), k, population_variance(vectors)),
        mode: PrefixMode::Exhaustive,
    })
}

pub fn check_prefix_mc<T: Scalar>(
    vectors: &[Vec<T>],
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<PrefixVarianceCheck<T>> {
    let (value, stderr) = prefix_second_moment_mc(vectors, k, samples, seed)?;
    Ok(PrefixVarianceCheck {
        m: vectors.len(),
        k,
        value,
        stderr,
        closed_form: prefix_closed_form(vectors.len(), k, population_variance(vectors)),
        mode: PrefixMode::MonteCarlo { samples },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::variance::{block_means, variance_decomposition_of};
    use crate::linalg::distance;

    fn random_population(m: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut gen = SeededGenerator::new(seed);
        (0..m).map(|_| (0..d).map(|_| gen.next_gaussian()).collect()).collect()
    }

    #[test]
    fn full_prefix_is_zero() {
        let x = random_population(5, 3, 1);
        assert_eq!(prefix_second_moment_exhaustive(&x, 5).unwrap(), 0.0);
        assert_eq!(prefix_second_moment_mc(&x, 5, 100, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn antipodal_pair() {
        let v: Vec<f64> = vec![0.6, -0.8, 2.0];
        let x = vec![v.clone(), v.iter().map(|c| -c).collect()];
        let got = prefix_second_moment_exhaustive(&x, 1).unwrap();
        let sigma2 = norm_sq(&v);
        assert!((got - sigma2).abs() < 1e-15);
        assert!((prefix_closed_form(2, 1, sigma2) - sigma2).abs() < 1e-15);
    }

    #[test]
    fn four_choose_two() {
        let x = random_population(4, 3, 9);
        let got = prefix_second_moment_exhaustive(&x, 2).unwrap();
        let expect = population_variance(&x) / 3.0;
        assert!((got - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn exhaustive_matches_closed_form() {
        for m in 1..=6 {
            for seed in 0..5 {
                let x = random_population(m, 4, 100 + seed);
                let mean = mean_vector(&x);
                for k in 1..=m {
                    let c = check_prefix_exhaustive(&x, k).unwrap();
                    if k < m {
                        assert!(c.relative_error() <= 1e-10, "m={m} k={k}: {c:?}");
                    } else {
                        assert_eq!(c.value, 0.0);
                    }
                    let (_, pm) = prefix_moments_exhaustive(&x, k).unwrap();
                    assert!(distance(&pm, &mean) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_within_four_sigma() {
        let x = random_population(50, 3, 21);
        let c = check_prefix_mc(&x, 10, 20_000, 4).unwrap();
        assert!((c.value - c.closed_form).abs() <= 4.0 * c.stderr, "{c:?}");
        assert!(c.stderr > 0.0);
    }

    #[test]
    fn block_level_with_coherent_blocks() {
        // Identical gradients inside each block: the block means carry all the variance.
        let base = random_population(4, 2, 5);
        let grads: Vec<Vec<f64>> = base.iter().flat_map(|g| std::iter::repeat_n(g.clone(), 3)).collect();
        let report = variance_decomposition_of(&grads, 3).unwrap();
        assert!(report.sigma2_within.abs() < 1e-15);
        let blocks = block_means(&grads, 3).unwrap();
        for k in 1..4 {
            let got = prefix_second_moment_exhaustive(&blocks, k).unwrap();
            let with_ind = prefix_closed_form(4, k, report.sigma2_ind);
            assert!((got - with_ind).abs() <= 1e-10 * with_ind);
        }
    }

    #[test]
    fn argument_checks() {
        let x = random_population(4, 2, 1);
        assert!(prefix_second_moment_exhaustive(&x, 0).is_err());
        assert!(prefix_second_moment_exhaustive(&x, 5).is_err());
        assert!(prefix_second_moment_mc(&x, 2, 99, 1).is_err());
        let big = random_population(9, 1, 1);
        assert!(matches!(prefix_second_moment_exhaustive(&big, 2), Err(Error::Size(_))));
        let ragged = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(prefix_second_moment_exhaustive(&ragged, 1).is_err());
    }
}
