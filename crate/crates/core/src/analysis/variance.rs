use serde::{Deserialize, Serialize};

use crate::linalg::{mean_vector, norm_sq, sub};
use crate::problems::FiniteSum;
use crate::{Error, Result, Scalar};

/// Split of the gradient variance at a point into a block-level part and a
/// within-block part, for consecutive equal blocks of size `block_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport<T> {
    /// `(1/n) Σ ‖g_i − ḡ‖²`
    pub sigma2_ind: T,
    /// `(1/n) Σ_r Σ_{i∈B_r} ‖g_i − G_r‖²`
    pub sigma2_within: T,
    /// `(1/K) Σ_r ‖G_r − ḡ‖²`
    pub sigma2_blk: T,
    pub num_blocks: usize,
    pub block_size: usize,
    /// Evaluation point; empty when built from a raw gradient population.
    pub at_w: Vec<T>,
}

impl<T: Scalar> VarianceReport<T> {
    /// `|σ²_ind − (σ²_within + σ²_blk)| / max(σ²_ind, tiny)`.
    pub fn identity_error(&self) -> T {
        let scale = self.sigma2_ind.max(T::min_positive_value());
        (self.sigma2_ind - self.sigma2_within - self.sigma2_blk).abs() / scale
    }
}

/// Means of the consecutive blocks `[r·b, (r+1)·b)`. Requires `b | m`.
pub fn block_means<T: Scalar>(vectors: &[Vec<T>], b: usize) -> Result<Vec<Vec<T>>> {
    let m = vectors.len();
    if b == 0 || m == 0 || !m.is_multiple_of(b) {
        return Err(Error::arg(format!(
            "block size {b} does not divide population size {m}; \
             ragged blocks are only supported for ordering (see block_shuffle)"
        )));
    }
    Ok(vectors.chunks(b).map(mean_vector).collect())
}

/// Variance decomposition of an explicit gradient population.
pub fn variance_decomposition_of<T: Scalar>(grads: &[Vec<T>], b: usize) -> Result<VarianceReport<T>> {
    let blocks = block_means(grads, b)?;
    let n = grads.len();
    let k = blocks.len();
    let mean = mean_vector(grads);
    let sq = |x: &[T], y: &[T]| norm_sq(&sub(x, y));

    let sigma2_ind = grads.iter().map(|g| sq(g, &mean)).sum::<T>() / T::of_usize(n);
    let sigma2_blk = blocks.iter().map(|g| sq(g, &mean)).sum::<T>() / T::of_usize(k);
    let sigma2_within = grads
        .chunks(b)
        .zip(&blocks)
        .map(|(chunk, centre)| chunk.iter().map(|g| sq(g, centre)).sum::<T>())
        .sum::<T>()
        / T::of_usize(n);

    Ok(VarianceReport {
        sigma2_ind,
        sigma2_within,
        sigma2_blk,
        num_blocks: k,
        block_size: b,
        at_w: Vec::new(),
    })
}

/// Variance decomposition of the component gradients of `problem` at `w`,
/// with blocks of consecutive component indices.
pub fn variance_decomposition<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    w: &[T],
    b: usize,
) -> Result<VarianceReport<T>> {
    problem.check_point(w)?;
    let grads = problem.component_gradients(w);
    let mut report = variance_decomposition_of(&grads, b)?;
    report.at_w = w.to_vec();
    Ok(report)
}
