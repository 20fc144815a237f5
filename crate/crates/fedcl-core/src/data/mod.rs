//! Synthetic dataset generation, dataset file I/O, non-IID device
//! partitioning, train/test splitting, and label-fraction subsetting.

mod dataset;
mod partition;
mod synthetic;

pub use dataset::{load_dataset, save_dataset, Dataset};
pub use partition::{label_subset, partition, split_train_test, PartitionSpec, SkewMode};
pub use synthetic::{generate_synthetic, SyntheticSpec};
