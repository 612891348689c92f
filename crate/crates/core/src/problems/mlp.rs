use super::{Design, FiniteSum};
use crate::data::Dataset;
use crate::rngcore::SeededGenerator;
use crate::{Error, Result, Scalar};

/// Fully connected ReLU network with a softmax cross-entropy head.
///
/// Parameters are flattened layer by layer as `W_l` (row-major,
/// `out × in`) followed by `b_l`. No Hessians are provided.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    x: Design<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> Mlp<T> {
    /// `sizes` lists layer widths from input to output, e.g. `[784, 256, 128, 10]`.
    /// Labels are class indices stored as floats.
    pub fn new(sizes: Vec<usize>, x: Vec<f64>, labels: &[f64]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        if labels.is_empty() || x.len() != labels.len() * sizes[0] {
            return Err(Error::arg("input matrix does not match first layer width"));
        }
        let classes = *sizes.last().unwrap();
        let labels = labels
            .iter()
            .map(|&y| {
                if y >= 0.0 && y.fract() == 0.0 && (y as usize) < classes {
                    Ok(y as usize)
                } else {
                    Err(Error::arg(format!("label {y} is not a class index below {classes}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for pair in sizes.windows(2) {
            offsets.push(dim);
            dim += pair[0] * pair[1] + pair[1];
        }
        Ok(Self {
            x: Design::from_f64(labels.len(), sizes[0], &x),
            sizes,
            offsets,
            dim,
            labels,
        })
    }

    pub fn from_dataset(sizes: Vec<usize>, ds: &Dataset) -> Result<Self> {
        if sizes.first() != Some(&ds.n_features()) {
            return Err(Error::Config(format!(
                "first layer width {:?} does not match {} input features",
                sizes.first(),
                ds.n_features()
            )));
        }
        Self::new(sizes, ds.to_dense(), ds.labels())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `(out, in)` shape of each weight matrix.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.sizes.windows(2).map(|p| (p[1], p[0])).collect()
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Forward pass returning pre-activations of every layer and the
    /// activations feeding each layer.
    fn forward(&self, i: usize, w: &[T]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let mut acts = vec![self.x.row(i).to_vec()];
        let mut pre = Vec::with_capacity(self.layers());
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let wl = &w[self.offsets[l]..self.offsets[l] + fan_in * fan_out];
            let bl = &w[self.offsets[l] + fan_in * fan_out..self.offsets[l] + fan_in * fan_out + fan_out];
            let input = acts.last().unwrap();
            let z: Vec<T> = (0..fan_out)
                .map(|r| {
                    wl[r * fan_in..(r + 1) * fan_in]
                        .iter()
                        .zip(input)
                        .fold(bl[r], |acc, (&a, &b)| acc + a * b)
                })
                .collect();
            if l + 1 < self.layers() {
                acts.push(z.iter().map(|&v| v.max(T::zero())).collect());
            }
            pre.push(z);
        }
        (pre, acts)
    }

    fn cross_entropy(logits: &[T], label: usize) -> (T, Vec<T>) {
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        let loss = total.ln() + max - logits[label];
        let probs = exps.into_iter().map(|e| e / total).collect();
        (loss, probs)
    }
}

impl<T: Scalar> FiniteSum<T> for Mlp<T> {
    fn num_components(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss_unchecked(&self, i: usize, w: &[T]) -> T {
        let (pre, _) = self.forward(i, w);
        Self::cross_entropy(pre.last().unwrap(), self.labels[i]).0
    }

    fn gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) {
        self.loss_and_gradient_unchecked(i, w, out);
    }

    fn loss_and_gradient_unchecked(&self, i: usize, w: &[T], out: &mut [T]) -> T {
        let (pre, acts) = self.forward(i, w);
        let (loss, mut delta) = Self::cross_entropy(pre.last().unwrap(), self.labels[i]);
        delta[self.labels[i]] = delta[self.labels[i]] - T::one();

        for l in (0..self.layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offsets[l];
            let input = &acts[l];
            for r in 0..fan_out {
                let row = &mut out[off + r * fan_in..off + (r + 1) * fan_in];
                for (o, &a) in row.iter_mut().zip(input) {
                    *o = delta[r] * a;
                }
            }
            out[off + fan_in * fan_out..off + fan_in * fan_out + fan_out].copy_from_slice(&delta);
            if l > 0 {
                let wl = &w[off..off + fan_in * fan_out];
                let mut back = vec![T::zero(); fan_in];
                for (r, &dr) in delta.iter().enumerate() {
                    for (bk, &wk) in back.iter_mut().zip(&wl[r * fan_in..(r + 1) * fan_in]) {
                        *bk = *bk + dr * wk;
                    }
                }
                for (bk, &z) in back.iter_mut().zip(&pre[l - 1]) {
                    if z <= T::zero() {
                        *bk = T::zero();
                    }
                }
                delta = back;
            }
        }
        loss
    }

    /// Weights `U(−1/√fan_in, 1/√fan_in)`, biases zero.
    fn initial_point(&self, gen: &mut SeededGenerator) -> Vec<T> {
        let mut w = vec![T::zero(); self.dim];
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut w[self.offsets[l]..self.offsets[l] + fan_in * fan_out] {
                *v = T::of(bound * (2.0 * gen.next_f64() - 1.0));
            }
        }
        w
    }
}
