use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    /// Per-row `(column, value)` pairs with strictly increasing columns.
    Sparse(Vec<Vec<(usize, f64)>>),
    /// Row-major `n x n_features` values.
    Dense(Vec<f64>),
}

/// Column statistics recorded by standardization. `kept[j]` is the source
/// column of output column `j`; `means`/`stds` are indexed like `kept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub kept: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Features,
    n_features: usize,
    labels: Vec<f64>,
    stats: Option<FeatureStats>,
}

impl Dataset {
    pub fn from_dense(n_features: usize, values: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if values.len() != n_features * labels.len() {
            return Err(Error::arg(format!(
                "dense feature buffer has {} values, expected {} x {}",
                values.len(),
                labels.len(),
                n_features
            )));
        }
        Ok(Self {
            features: Features::Dense(values),
            n_features,
            labels,
            stats: None,
        })
    }

    pub fn from_sparse(
        n_features: usize,
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::arg("row count and label count differ"));
        }
        for (r, row) in rows.iter().enumerate() {
            for pair in row.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(Error::arg(format!("row {r}: feature indices not increasing")));
                }
            }
            if row.last().is_some_and(|&(c, _)| c >= n_features) {
                return Err(Error::arg(format!("row {r}: feature index out of range")));
            }
        }
        Ok(Self {
            features: Features::Sparse(rows),
            n_features,
            labels,
            stats: None,
        })
    }

    pub(crate) fn with_stats(mut self, stats: FeatureStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn feature_stats(&self) -> Option<&FeatureStats> {
        self.stats.as_ref()
    }

    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match &self.features {
            Features::Dense(v) => v[i * self.n_features..(i + 1) * self.n_features].to_vec(),
            Features::Sparse(rows) => {
                let mut out = vec![0.0; self.n_features];
                for &(c, x) in &rows[i] {
                    out[c] = x;
                }
                out
            }
        }
    }

    /// Row-major dense copy of the feature matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.features {
            Features::Dense(v) => v.clone(),
            Features::Sparse(_) => (0..self.n_samples()).flat_map(|i| self.row_dense(i)).collect(),
        }
    }

    /// Maps labels strictly above `threshold` to `+1`, the rest to `-1`.
    pub fn binarize_labels(mut self, threshold: f64) -> Self {
        for y in &mut self.labels {
            *y = if *y > threshold { 1.0 } else { -1.0 };
        }
        self
    }

    /// When exactly two distinct label values occur, maps the smaller to
    /// `-1` and the larger to `+1`. Otherwise labels are left untouched.
    pub fn map_binary_labels(mut self) -> Self {
        let mut distinct: Vec<f64> = Vec::new();
        for &y in &self.labels {
            if !distinct.contains(&y) {
                distinct.push(y);
                if distinct.len() > 2 {
                    return self;
                }
            }
        }
        if distinct.len() == 2 {
            let lo = distinct[0].min(distinct[1]);
            for y in &mut self.labels {
                *y = if *y == lo { -1.0 } else { 1.0 };
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_mapping_by_order() {
        let ds = Dataset::from_dense(0, vec![], vec![2.0, 1.0, 2.0]).unwrap().map_binary_labels();
        assert_eq!(ds.labels(), &[1.0, -1.0, 1.0]);
        let ds = Dataset::from_dense(0, vec![], vec![0.0, 1.0]).unwrap().map_binary_labels();
        assert_eq!(ds.labels(), &[-1.0, 1.0]);
        let ds = Dataset::from_dense(0, vec![], vec![0.0, 1.0, 2.0]).unwrap().map_binary_labels();
        assert_eq!(ds.labels(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn digit_binarization() {
        let ds = Dataset::from_dense(0, vec![], vec![0.0, 5.0, 6.0, 9.0]).unwrap().binarize_labels(5.0);
        assert_eq!(ds.labels(), &[-1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn sparse_rows_validated() {
        assert!(Dataset::from_sparse(3, vec![vec![(1, 1.0), (0, 1.0)]], vec![1.0]).is_err());
        assert!(Dataset::from_sparse(3, vec![vec![(3, 1.0)]], vec![1.0]).is_err());
        let ds = Dataset::from_sparse(3, vec![vec![(0, 1.0), (2, 4.0)]], vec![1.0]).unwrap();
        assert_eq!(ds.row_dense(0), vec![1.0, 0.0, 4.0]);
    }
}
