//! Domain adaptation: apply, retrain, or fine-tune a trained pair model
//! on a corpus from a different formation.

use crate::corpus::Corpus;
use crate::derive_seed;
use crate::models::{Checkpoint, ModelError, SiameseModel, TripletModel};
use crate::sampler::{make_pair_dataset, sample_intervals, Interval, SampleMode};
use crate::wellsim::{evaluate_clustering, interval_labels, ClusterTarget, IntervalEncoder};

use super::pairwise::{evaluate_pair_scores, train_pairwise_model};
use super::triplet::train_triplet_model;
use super::{k_fold_splits, subcorpus, History, TrainConfig, TrainingError, WellSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptMode {
    /// Apply the source model unchanged.
    Pretrained,
    /// Ignore the source model; train fresh on the target wells.
    Scratch,
    /// Start from the source weights and train on the target wells.
    Finetune,
}

impl AdaptMode {
    pub fn parse(s: &str) -> Option<AdaptMode> {
        match s.to_ascii_lowercase().as_str() {
            "pretrained" => Some(AdaptMode::Pretrained),
            "scratch" | "from-scratch" => Some(AdaptMode::Scratch),
            "finetune" | "fine-tune" | "fine-tuning" => Some(AdaptMode::Finetune),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdaptMode::Pretrained => "pretrained",
            AdaptMode::Scratch => "scratch",
            AdaptMode::Finetune => "finetune",
        }
    }
}

/// The Table-7-style row set: pair ROC AUC plus interval-clustering ARI
/// for the three label targets (None when the target labels are absent).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptReport {
    pub mode: AdaptMode,
    pub roc_auc: f64,
    pub ari_wellname: Option<f64>,
    pub ari_class: Option<f64>,
    pub ari_class_layer: Option<f64>,
}

enum PairModel {
    Siamese(SiameseModel),
    Triplet(TripletModel),
}

impl PairModel {
    fn from_checkpoint(ck: &Checkpoint) -> Result<PairModel, ModelError> {
        if ck.arch().starts_with("siamese-") {
            Ok(PairModel::Siamese(SiameseModel::from_checkpoint(ck)?))
        } else if ck.arch().starts_with("triplet-") {
            Ok(PairModel::Triplet(TripletModel::from_checkpoint(ck)?))
        } else {
            Err(ModelError::ArchitectureMismatch {
                expected: "siamese-* or triplet-*".into(),
                got: ck.arch().to_string(),
            })
        }
    }

    /// Fresh initialization with the same architecture.
    fn fresh_like(ck: &Checkpoint, input_dim: usize, seed: u64) -> Result<PairModel, ModelError> {
        match Self::from_checkpoint(ck)? {
            PairModel::Siamese(m) => {
                let mut config = m.config.clone();
                if config.input_dim != input_dim {
                    return Err(ModelError::ArchitectureMismatch {
                        expected: format!("input_dim={input_dim}"),
                        got: format!("input_dim={}", config.input_dim),
                    });
                }
                config.input_dim = input_dim;
                Ok(PairModel::Siamese(SiameseModel::init(config, seed)?))
            }
            PairModel::Triplet(m) => {
                if m.input_dim != input_dim {
                    return Err(ModelError::ArchitectureMismatch {
                        expected: format!("input_dim={input_dim}"),
                        got: format!("input_dim={}", m.input_dim),
                    });
                }
                Ok(PairModel::Triplet(TripletModel::init(
                    input_dim, m.hidden, m.metric, seed,
                )))
            }
        }
    }

    fn train(
        &self,
        corpus: &Corpus,
        split: &WellSplit,
        config: &TrainConfig,
    ) -> Result<History, TrainingError> {
        match self {
            PairModel::Siamese(m) => train_pairwise_model(m, corpus, split, config),
            PairModel::Triplet(m) => train_triplet_model(m, corpus, split, config),
        }
    }

    fn score_pairs(&self, pairs: &[(&Interval, &Interval)], l: usize) -> Vec<f64> {
        match self {
            PairModel::Siamese(m) => m.score_pairs(pairs, l),
            PairModel::Triplet(m) => m.score_pairs(pairs, l),
        }
    }

    fn distance_style(&self) -> bool {
        match self {
            PairModel::Siamese(m) => m.config.head != crate::models::Head::Fc3,
            PairModel::Triplet(_) => true,
        }
    }

    fn to_checkpoint(&self) -> Checkpoint {
        match self {
            PairModel::Siamese(m) => m.to_checkpoint(),
            PairModel::Triplet(m) => m.to_checkpoint(),
        }
    }

    fn encoder(&self) -> Result<IntervalEncoder, ModelError> {
        IntervalEncoder::from_checkpoint(&self.to_checkpoint())
    }
}

/// Run one adaptation mode on the target corpus. The target is split in
/// half at well level; training (when the mode trains at all) sees one
/// half and every reported metric comes from the other half.
pub fn adapt(
    source: &Checkpoint,
    target: &Corpus,
    mode: AdaptMode,
    config: &TrainConfig,
) -> Result<(Checkpoint, AdaptReport, History), TrainingError> {
    config.validate()?;
    if target.wells.len() < 2 {
        return Err(TrainingError::NotEnoughWells {
            needed: 2,
            found: target.wells.len(),
            what: "domain adaptation",
        });
    }
    let split = k_fold_splits(target, 2, derive_seed(config.seed, "adapt-split", 0))?
        .into_iter()
        .next()
        .expect("two folds");

    let model = match mode {
        AdaptMode::Pretrained | AdaptMode::Finetune => PairModel::from_checkpoint(source)?,
        AdaptMode::Scratch => PairModel::fresh_like(
            source,
            target.n_channels(),
            derive_seed(config.seed, "adapt-init", 0),
        )?,
    };
    if let PairModel::Siamese(m) = &model {
        if m.config.input_dim != target.n_channels() {
            return Err(TrainingError::Model(ModelError::ArchitectureMismatch {
                expected: format!("input_dim={}", target.n_channels()),
                got: format!("input_dim={}", m.config.input_dim),
            }));
        }
    }
    if let PairModel::Triplet(m) = &model {
        if m.input_dim != target.n_channels() {
            return Err(TrainingError::Model(ModelError::ArchitectureMismatch {
                expected: format!("input_dim={}", target.n_channels()),
                got: format!("input_dim={}", m.input_dim),
            }));
        }
    }

    let history = match mode {
        AdaptMode::Pretrained => History::default(),
        AdaptMode::Scratch | AdaptMode::Finetune => model.train(target, &split, config)?,
    };

    let report = evaluate_adapted(&model, target, &split, mode, config)?;
    Ok((model.to_checkpoint(), report, history))
}

fn evaluate_adapted(
    model: &PairModel,
    target: &Corpus,
    split: &WellSplit,
    mode: AdaptMode,
    config: &TrainConfig,
) -> Result<AdaptReport, TrainingError> {
    let eval_corpus = subcorpus(target, &split.test);
    let l = config.interval_len;
    let pairs = make_pair_dataset(
        &eval_corpus,
        config.task,
        config.eval_size.max(200),
        l,
        derive_seed(config.seed, "adapt-eval", 0),
    )?;
    let refs: Vec<(&Interval, &Interval)> = pairs.iter().map(|p| (&p.a, &p.b)).collect();
    let scores = model.score_pairs(&refs, l);
    let (roc_auc, _, _) = evaluate_pair_scores(&scores, &pairs, model.distance_style())?;

    // interval-level clustering against the three label targets
    let mut intervals: Vec<Interval> = Vec::new();
    for (i, well) in eval_corpus.wells.iter().enumerate() {
        if well.len() < l {
            continue;
        }
        let per_well = 20.min(well.len() - l + 1);
        intervals.extend(sample_intervals(
            well,
            per_well,
            l,
            SampleMode::Random,
            derive_seed(config.seed, "adapt-cluster", i as u64),
        )?);
    }
    let encoder = model.encoder()?;
    let embedded = encoder.embed_intervals(&intervals, l);

    let ari_for = |target_kind: ClusterTarget| -> Option<f64> {
        let labels = interval_labels(&eval_corpus, &intervals, target_kind).ok()?;
        evaluate_clustering(&embedded, &labels, None).ok().map(|r| r.ari)
    };
    Ok(AdaptReport {
        mode,
        roc_auc,
        ari_wellname: ari_for(ClusterTarget::WellName),
        ari_class: ari_for(ClusterTarget::Class),
        ari_class_layer: ari_for(ClusterTarget::ClassLayer),
    })
}
