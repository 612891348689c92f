use super::dataset::{Dataset, FeatureStats};
use crate::{Error, Result};

/// Column-wise `(x - mean) / std` with the population standard deviation.
///
/// Constant columns (variance at rounding level relative to the column's
/// magnitude) are dropped and listed in [`FeatureStats::dropped`]. The
/// result is dense.
pub fn standardize(ds: &Dataset) -> Result<Dataset> {
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::arg("standardization needs at least two samples"));
    }
    let d = ds.n_features();
    let dense = ds.to_dense();
    let dense = &dense;
    let column = |j: usize| (0..n).map(move |i| dense[i * d + j]);

    let mut stats = FeatureStats {
        kept: Vec::new(),
        means: Vec::new(),
        stds: Vec::new(),
        dropped: Vec::new(),
    };
    for j in 0..d {
        let mean = column(j).sum::<f64>() / n as f64;
        let var = column(j).map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = column(j).fold(0.0f64, |m, x| m.max(x.abs()));
        if var <= (1e-12 * scale).powi(2) {
            stats.dropped.push(j);
        } else {
            stats.kept.push(j);
            stats.means.push(mean);
            stats.stds.push(var.sqrt());
        }
    }

    let width = stats.kept.len();
    let mut values = Vec::with_capacity(n * width);
    for i in 0..n {
        for (k, &j) in stats.kept.iter().enumerate() {
            values.push((dense[i * d + j] - stats.means[k]) / stats.stds[k]);
        }
    }
    Ok(Dataset::from_dense(width, values, ds.labels().to_vec())?.with_stats(stats))
}
