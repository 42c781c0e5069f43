//! Cross-entropy training of the siamese model on stratified pair
//! datasets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{bce_loss, AdamState, Tensor};
use crate::corpus::Corpus;
use crate::derive_seed;
use crate::metrics::{accuracy_best_threshold, confusion, pr_auc, roc_auc};
use crate::models::{EncoderConfig, Head, SiameseModel};
use crate::sampler::{make_pair_dataset, PairExample};

use super::{subcorpus, EpochStats, History, TrainConfig, TrainingError, WellSplit};

/// Train a freshly initialized siamese model with the given head;
/// evaluation runs on pairs drawn from the held-out wells only.
pub fn train_pairwise(
    corpus: &Corpus,
    split: &WellSplit,
    head: Head,
    config: &TrainConfig,
) -> Result<(SiameseModel, History), TrainingError> {
    let model = SiameseModel::init(
        EncoderConfig::siamese(corpus.n_channels(), head),
        derive_seed(config.seed, "init", 0),
    )?;
    let history = train_pairwise_model(&model, corpus, split, config)?;
    Ok((model, history))
}

/// Same loop starting from an existing model (used by fine-tuning).
pub fn train_pairwise_model(
    model: &SiameseModel,
    corpus: &Corpus,
    split: &WellSplit,
    config: &TrainConfig,
) -> Result<History, TrainingError> {
    config.validate()?;
    super::assert_split_integrity(split);
    let train_corpus = subcorpus(corpus, &split.train);
    let val_corpus = subcorpus(corpus, &split.test);

    let l = config.interval_len;
    let pairs = make_pair_dataset(
        &train_corpus,
        config.task,
        config.train_size,
        l,
        derive_seed(config.seed, "pairs", 0),
    )?;
    let val_pairs = if config.eval_size > 0 && val_corpus.wells.len() >= 2 {
        make_pair_dataset(
            &val_corpus,
            config.task,
            config.eval_size,
            l,
            derive_seed(config.seed, "val-pairs", 0),
        )?
    } else {
        Vec::new()
    };

    let params = model.params();
    let mut adam = AdamState::new(&params, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "train", 0));

    let mut history = History::default();
    let mut snapshot: Vec<Vec<f64>> = params.iter().map(|p| p.to_vec()).collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            for p in &params {
                p.zero_grad();
            }
            let a: Vec<&[f64]> = batch.iter().map(|&i| pairs[i].a.data()).collect();
            let b: Vec<&[f64]> = batch.iter().map(|&i| pairs[i].b.data()).collect();
            let labels: Vec<f64> = batch.iter().map(|&i| f64::from(pairs[i].label)).collect();
            let probs = model.forward_probabilities(&a, &b, l, true, &mut rng);
            let loss = bce_loss(&probs, &labels);
            let loss_value = loss.item();
            if !loss_value.is_finite() {
                restore(&params, &snapshot);
                history.aborted = true;
                break 'epochs;
            }
            loss.backward();
            if adam.step(&params).is_err() {
                restore(&params, &snapshot);
                history.aborted = true;
                break 'epochs;
            }
            epoch_loss += loss_value;
            batches += 1;
        }
        snapshot = params.iter().map(|p| p.to_vec()).collect();

        let mut stats = EpochStats {
            epoch,
            train_loss: epoch_loss / batches.max(1) as f64,
            val_roc_auc: None,
            val_pr_auc: None,
            val_accuracy: None,
        };
        if !val_pairs.is_empty() && epoch % config.eval_every.max(1) == 0 {
            let (roc, pr, acc) = evaluate_pair_scores(
                &score_examples(model, &val_pairs, l),
                &val_pairs,
                model.config.head != Head::Fc3,
            )?;
            stats.val_roc_auc = Some(roc);
            stats.val_pr_auc = Some(pr);
            stats.val_accuracy = Some(acc);
        }
        history.epochs.push(stats);
    }
    Ok(history)
}

fn restore(params: &[Tensor], snapshot: &[Vec<f64>]) {
    for (p, s) in params.iter().zip(snapshot) {
        p.set_values(s);
    }
}

pub(super) fn score_examples(model: &SiameseModel, pairs: &[PairExample], l: usize) -> Vec<f64> {
    let refs: Vec<(&crate::sampler::Interval, &crate::sampler::Interval)> =
        pairs.iter().map(|p| (&p.a, &p.b)).collect();
    model.score_pairs(&refs, l)
}

/// ROC/PR areas plus accuracy. Probability-like scores use the 0.5
/// threshold; distance-style scores take the accuracy-maximizing
/// threshold, which is how a distance model is turned into a classifier.
pub(super) fn evaluate_pair_scores(
    scores: &[f64],
    pairs: &[PairExample],
    distance_style: bool,
) -> Result<(f64, f64, f64), TrainingError> {
    let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
    let roc = roc_auc(scores, &labels)?;
    let pr = pr_auc(scores, &labels)?;
    let acc = if distance_style {
        accuracy_best_threshold(scores, &labels).1
    } else {
        confusion(scores, &labels, 0.5).accuracy()
    };
    Ok((roc, pr, acc))
}
