//! Evaluation metrics: confusion-matrix quantities, ROC/PR areas,
//! chance-adjusted partition agreement (Rand, mutual information,
//! V-measure), and the agglomerative clustering used to produce
//! predicted partitions.

mod agglomerative;
mod classification;
mod clustering;

pub use agglomerative::agglomerative;
pub use classification::{accuracy_best_threshold, confusion, pr_auc, roc_auc, Confusion};
pub use clustering::{mi_ami, rand_ari, v_measure, Partition};

#[derive(Debug, Clone, thiserror::Error)]
pub enum MetricsError {
    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("need at least one positive and one negative label")]
    SingleClassLabels,
    #[error("need at least one positive label")]
    NoPositives,
    #[error("partitions must cover at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("cannot form {k} clusters from {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("clustering input is empty or has inconsistent dimensions")]
    BadPoints,
}
