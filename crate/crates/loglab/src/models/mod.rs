//! Model zoo: raw-feature distance baselines, the siamese encoder with
//! its three similarity heads, the triplet encoder, logistic regression,
//! and gradient-boosted trees, plus the binary checkpoint format shared
//! by all of them.

mod baselines;
mod checkpoint;
mod gbdt;
mod siamese;

pub use baselines::{train_logreg, LogReg};
pub use checkpoint::{Checkpoint, NamedParam, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gbdt::{train_gbdt, Gbdt, GbdtConfig};
pub use siamese::{
    EncoderConfig, FcStack, Head, SiameseModel, TripletModel, DROPOUT_P, SIAMESE_HIDDEN,
    TRIPLET_HIDDEN,
};

use crate::sampler::Interval;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("training set is degenerate: {0}")]
    DegenerateTraining(String),
    #[error("architecture mismatch: checkpoint holds '{got}', expected '{expected}'")]
    ArchitectureMismatch { expected: String, got: String },
    #[error("invalid model configuration: {0}")]
    BadConfig(String),
    #[error("checkpoint file error at '{path}': {message}")]
    CheckpointIo { path: String, message: String },
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
}

/// `1 / (1 + ||x - y||_2)` on flat vectors; 1 for identical inputs.
pub fn euclidean_similarity(x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::ShapeMismatch {
            op: "euclidean_similarity",
            left: vec![x.len()],
            right: vec![y.len()],
        });
    }
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 / (1.0 + dist2.sqrt()))
}

/// Cosine of the angle between two flat vectors; errors on zero input.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::ShapeMismatch {
            op: "cosine_similarity",
            left: vec![x.len()],
            right: vec![y.len()],
        });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(ModelError::ZeroVector);
    }
    // rounding can push |cos| a ulp past 1
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Eq-style similarity of two intervals flattened to vectors.
pub fn similarity_euclidean_raw(a: &Interval, b: &Interval) -> Result<f64, ModelError> {
    euclidean_similarity(a.data(), b.data())
}

pub fn similarity_cosine_raw(a: &Interval, b: &Interval) -> Result<f64, ModelError> {
    cosine_similarity(a.data(), b.data())
}

/// Any trained pair model restored from a checkpoint, scoring interval
/// pairs through its own head (classic baselines go through the 2k
/// feature concatenation they were trained on).
pub enum AnyPairModel {
    Siamese(SiameseModel),
    Triplet(TripletModel),
    LogReg(LogReg),
    Gbdt(Gbdt),
}

impl AnyPairModel {
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<AnyPairModel, ModelError> {
        let arch = ck.arch();
        if arch.starts_with("siamese-") {
            Ok(AnyPairModel::Siamese(SiameseModel::from_checkpoint(ck)?))
        } else if arch.starts_with("triplet-") {
            Ok(AnyPairModel::Triplet(TripletModel::from_checkpoint(ck)?))
        } else if arch == "logreg" {
            Ok(AnyPairModel::LogReg(LogReg::from_checkpoint(ck)?))
        } else if arch == "gbdt" {
            Ok(AnyPairModel::Gbdt(Gbdt::from_checkpoint(ck)?))
        } else {
            Err(ModelError::ArchitectureMismatch {
                expected: "a pair model".into(),
                got: arch.to_string(),
            })
        }
    }

    /// Higher score means more similar for every variant.
    pub fn score_pairs(&self, pairs: &[(&Interval, &Interval)], l: usize) -> Vec<f64> {
        match self {
            AnyPairModel::Siamese(m) => m.score_pairs(pairs, l),
            AnyPairModel::Triplet(m) => m.score_pairs(pairs, l),
            AnyPairModel::LogReg(m) => pairs
                .iter()
                .map(|(a, b)| m.predict_proba(&pair_features(a, b)))
                .collect(),
            AnyPairModel::Gbdt(m) => pairs
                .iter()
                .map(|(a, b)| m.predict_proba(&pair_features(a, b)))
                .collect(),
        }
    }

    /// Whether scores are calibrated probabilities (threshold 0.5) or
    /// distance-style similarities (threshold fitted on validation).
    pub fn probability_scores(&self) -> bool {
        match self {
            AnyPairModel::Siamese(m) => m.config.head == Head::Fc3,
            AnyPairModel::Triplet(_) => false,
            AnyPairModel::LogReg(_) | AnyPairModel::Gbdt(_) => true,
        }
    }
}

/// Concatenated 2k feature vectors of the two intervals (4k total), the
/// input representation of the classic baselines.
pub fn pair_features(a: &Interval, b: &Interval) -> Vec<f64> {
    let mut f = crate::sampler::featurize(a).values;
    f.extend(crate::sampler::featurize(b).values);
    f
}
