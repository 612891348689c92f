//! Dataset ingestion and preprocessing.

mod dataset;
mod libsvm;
mod standardize;
mod tabular;

pub use dataset::{Dataset, FeatureStats, Features};
pub use libsvm::{parse_libsvm, serialize_libsvm};
pub use standardize::standardize;
pub use tabular::{parse_csv, LabelColumn};
