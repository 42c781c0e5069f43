//! Training loops: siamese (cross-entropy) and triplet (contrastive)
//! interval models, the end-to-end well classifier with its three
//! regimes, and the three domain-adaptation modes.
//!
//! All splits are at well level: every sample of a well lands either in
//! the training or in the evaluation side, never both.

mod adapt;
mod end_to_end;
mod pairwise;
mod triplet;

pub use adapt::{adapt, AdaptMode, AdaptReport};
pub use end_to_end::{train_end_to_end, EndToEndConfig, EndToEndModel, Regime};
pub use pairwise::{train_pairwise, train_pairwise_model};
pub use triplet::{train_triplet, train_triplet_model, triplet_separation};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::metrics::MetricsError;
use crate::models::ModelError;
use crate::sampler::{SamplerError, Task};

#[derive(Debug, Clone, thiserror::Error)]
pub enum TrainingError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    WellSim(#[from] crate::wellsim::WellSimError),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("well '{0}' has no class label; end-to-end training needs labeled wells")]
    UnlabeledWell(String),
    #[error("need at least {needed} wells for {what}, found {found}")]
    NotEnoughWells {
        needed: usize,
        found: usize,
        what: &'static str,
    },
    #[error("cannot write '{path}': {message}")]
    Io { path: String, message: String },
}

/// Shared knobs for pairwise and triplet training.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub task: Task,
    /// Zero epochs is allowed and returns the initialization untouched.
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub margin: f64,
    pub seed: u64,
    pub eval_every: usize,
    /// Number of training pairs (or triplets).
    pub train_size: usize,
    /// Held-out pair count per evaluation; 0 skips evaluation.
    pub eval_size: usize,
    pub interval_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Linking,
            epochs: 30,
            batch_size: 64,
            lr: 0.001,
            margin: 1.0,
            seed: 0,
            eval_every: 1,
            train_size: 10_000,
            eval_size: 1000,
            interval_len: crate::sampler::DEFAULT_INTERVAL_LEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        if self.batch_size == 0 {
            return Err(TrainingError::BadConfig("batch_size must be >= 1".into()));
        }
        if self.margin <= 0.0 {
            return Err(TrainingError::BadConfig("margin must be positive".into()));
        }
        if self.interval_len == 0 {
            return Err(TrainingError::BadConfig("interval length must be >= 1".into()));
        }
        Ok(())
    }
}

/// One evaluated epoch; metric fields are None when no evaluation ran.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_roc_auc: Option<f64>,
    pub val_pr_auc: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// True when training stopped early on a non-finite loss and the
    /// last good parameters were restored.
    pub aborted: bool,
}

impl History {
    pub fn to_csv(&self, path: &Path) -> Result<(), TrainingError> {
        let io_err = |e: csv::Error| TrainingError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        w.write_record(["epoch", "train_loss", "val_roc_auc", "val_pr_auc", "val_accuracy"])
            .map_err(io_err)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                format!("{}", e.train_loss),
                fmt(e.val_roc_auc),
                fmt(e.val_pr_auc),
                fmt(e.val_accuracy),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| TrainingError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// A well-level train/test split, by well id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WellSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl WellSplit {
    /// Everything in train, nothing held out.
    pub fn all_train(corpus: &Corpus) -> WellSplit {
        WellSplit {
            train: corpus.wells.iter().map(|w| w.well_id.clone()).collect(),
            test: Vec::new(),
        }
    }
}

/// Corpus restricted to the given well ids, in corpus order.
pub fn subcorpus(corpus: &Corpus, ids: &[String]) -> Corpus {
    let keep: std::collections::BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    Corpus {
        channels: corpus.channels.clone(),
        wells: corpus
            .wells
            .iter()
            .filter(|w| keep.contains(w.well_id.as_str()))
            .cloned()
            .collect(),
    }
}

/// `k` cross-validation folds over wells: ids are sorted, shuffled by
/// the seed, and chunked; fold `i` holds out chunk `i`.
pub fn k_fold_splits(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<WellSplit>, TrainingError> {
    let n = corpus.wells.len();
    if k < 2 || k > n {
        return Err(TrainingError::BadConfig(format!(
            "cannot make {k} folds out of {n} wells"
        )));
    }
    let mut ids: Vec<String> = corpus.wells.iter().map(|w| w.well_id.clone()).collect();
    ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok((0..k)
        .map(|i| {
            let test = folds[i].clone();
            let train = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, f)| f.iter().cloned())
                .collect();
            WellSplit { train, test }
        })
        .collect())
}

/// Split stratified by class so each class appears on both sides
/// (needed for end-to-end training and its evaluation).
pub fn stratified_class_split(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<WellSplit, TrainingError> {
    let mut by_class: std::collections::BTreeMap<i64, Vec<String>> = Default::default();
    for w in &corpus.wells {
        let class = w
            .class_label
            .ok_or_else(|| TrainingError::UnlabeledWell(w.well_id.clone()))?;
        by_class.entry(class).or_default().push(w.well_id.clone());
    }
    if by_class.len() < 2 {
        return Err(TrainingError::BadConfig(
            "need at least two classes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = WellSplit {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (_, mut ids) in by_class {
        if ids.len() < 2 {
            return Err(TrainingError::BadConfig(
                "every class needs at least two wells to appear on both sides".into(),
            ));
        }
        ids.sort();
        ids.shuffle(&mut rng);
        let n_test = ((ids.len() as f64 * test_fraction).round() as usize)
            .clamp(1, ids.len() - 1);
        for (i, id) in ids.into_iter().enumerate() {
            if i < n_test {
                split.test.push(id);
            } else {
                split.train.push(id);
            }
        }
    }
    Ok(split)
}

/// Audit helper: assert no test well leaks into a set of training well
/// ids (used by tests and by the fold driver).
pub fn assert_split_integrity(split: &WellSplit) {
    let train: std::collections::BTreeSet<&str> =
        split.train.iter().map(String::as_str).collect();
    for id in &split.test {
        assert!(
            !train.contains(id.as_str()),
            "well '{id}' appears in both split sides"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthSpec};

    fn corpus() -> Corpus {
        generate_synthetic(
            &SynthSpec {
                n_classes: 2,
                wells_per_class: 5,
                well_length: 300,
                n_channels: 2,
                ..Default::default()
            },
            3,
        )
        .unwrap()
    }

    #[test]
    fn folds_partition_the_wells() {
        let corpus = corpus();
        let folds = k_fold_splits(&corpus, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = Vec::new();
        for f in &folds {
            assert_split_integrity(f);
            assert_eq!(f.train.len() + f.test.len(), 10);
            seen.extend(f.test.clone());
        }
        seen.sort();
        let mut all: Vec<String> = corpus.wells.iter().map(|w| w.well_id.clone()).collect();
        all.sort();
        assert_eq!(seen, all);
    }

    #[test]
    fn folds_are_deterministic_and_order_insensitive() {
        let corpus = corpus();
        let mut reversed = corpus.clone();
        reversed.wells.reverse();
        assert_eq!(
            k_fold_splits(&corpus, 3, 9).unwrap(),
            k_fold_splits(&reversed, 3, 9).unwrap()
        );
    }

    #[test]
    fn stratified_split_covers_every_class_on_both_sides() {
        let corpus = corpus();
        let split = stratified_class_split(&corpus, 0.3, 4).unwrap();
        assert_split_integrity(&split);
        for side in [&split.train, &split.test] {
            let classes: std::collections::BTreeSet<i64> = side
                .iter()
                .map(|id| corpus.well(id).unwrap().class_label.unwrap())
                .collect();
            assert_eq!(classes.len(), 2, "side {side:?}");
        }
    }
}
