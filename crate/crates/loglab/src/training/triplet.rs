//! Contrastive training with the triplet hinge.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{triplet_loss, AdamState, DistanceMetric};
use crate::corpus::Corpus;
use crate::derive_seed;
use crate::models::TripletModel;
use crate::sampler::{make_pair_dataset, make_triplets};

use super::pairwise::evaluate_pair_scores;
use super::{subcorpus, EpochStats, History, TrainConfig, TrainingError, WellSplit};

/// Train a freshly initialized triplet encoder; evaluation scores
/// held-out pairs with the embedding similarity of the model's metric.
pub fn train_triplet(
    corpus: &Corpus,
    split: &WellSplit,
    metric: DistanceMetric,
    hidden: usize,
    config: &TrainConfig,
) -> Result<(TripletModel, History), TrainingError> {
    let model = TripletModel::init(
        corpus.n_channels(),
        hidden,
        metric,
        derive_seed(config.seed, "init", 0),
    );
    let history = train_triplet_model(&model, corpus, split, config)?;
    Ok((model, history))
}

/// Same loop starting from an existing model (used by fine-tuning).
pub fn train_triplet_model(
    model: &TripletModel,
    corpus: &Corpus,
    split: &WellSplit,
    config: &TrainConfig,
) -> Result<History, TrainingError> {
    config.validate()?;
    super::assert_split_integrity(split);
    let metric = model.metric;
    let train_corpus = subcorpus(corpus, &split.train);
    let val_corpus = subcorpus(corpus, &split.test);
    let l = config.interval_len;

    let triplets = make_triplets(
        &train_corpus,
        config.task,
        config.train_size,
        l,
        derive_seed(config.seed, "triplets", 0),
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
    let mut order: Vec<usize> = (0..triplets.len()).collect();

    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            for p in &params {
                p.zero_grad();
            }
            let anchors: Vec<&[f64]> = batch.iter().map(|&i| triplets[i].anchor.data()).collect();
            let positives: Vec<&[f64]> =
                batch.iter().map(|&i| triplets[i].positive.data()).collect();
            let negatives: Vec<&[f64]> =
                batch.iter().map(|&i| triplets[i].negative.data()).collect();
            let e_a = model.embed_batch(&anchors, l);
            let e_p = model.embed_batch(&positives, l);
            let e_n = model.embed_batch(&negatives, l);
            let loss = triplet_loss(&e_a, &e_p, &e_n, config.margin, metric);
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
            let refs: Vec<(&crate::sampler::Interval, &crate::sampler::Interval)> =
                val_pairs.iter().map(|p| (&p.a, &p.b)).collect();
            let scores = model.score_pairs(&refs, l);
            let (roc, pr, acc) = evaluate_pair_scores(&scores, &val_pairs, true)?;
            stats.val_roc_auc = Some(roc);
            stats.val_pr_auc = Some(pr);
            stats.val_accuracy = Some(acc);
        }
        history.epochs.push(stats);
    }
    Ok(history)
}

fn restore(params: &[crate::autodiff::Tensor], snapshot: &[Vec<f64>]) {
    for (p, s) in params.iter().zip(snapshot) {
        p.set_values(s);
    }
}

/// Fraction of triplets whose anchor sits closer to the positive than
/// to the negative under the model's metric.
pub fn triplet_separation(
    model: &TripletModel,
    triplets: &[crate::sampler::TripletExample],
    l: usize,
) -> f64 {
    if triplets.is_empty() {
        return 0.0;
    }
    let mut satisfied = 0usize;
    for chunk in triplets.chunks(128) {
        let anchors: Vec<&[f64]> = chunk.iter().map(|t| t.anchor.data()).collect();
        let positives: Vec<&[f64]> = chunk.iter().map(|t| t.positive.data()).collect();
        let negatives: Vec<&[f64]> = chunk.iter().map(|t| t.negative.data()).collect();
        let e_a = model.embed_batch(&anchors, l);
        let e_p = model.embed_batch(&positives, l);
        let e_n = model.embed_batch(&negatives, l);
        let d_ap = crate::autodiff::embedding_distances(&e_a, &e_p, model.metric).to_vec();
        let d_an = crate::autodiff::embedding_distances(&e_a, &e_n, model.metric).to_vec();
        satisfied += d_ap.iter().zip(&d_an).filter(|(p, n)| p < n).count();
    }
    satisfied as f64 / triplets.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthSpec};
    use crate::sampler::Task;
    use crate::training::k_fold_splits;

    fn corpus(seed: u64) -> Corpus {
        generate_synthetic(
            &SynthSpec {
                n_classes: 2,
                wells_per_class: 3,
                well_length: 400,
                n_channels: 3,
                ..Default::default()
            },
            seed,
        )
        .unwrap()
    }

    fn config(seed: u64) -> TrainConfig {
        TrainConfig {
            task: Task::Linking,
            epochs: 4,
            batch_size: 48,
            train_size: 288,
            eval_size: 200,
            seed,
            ..Default::default()
        }
    }

    /// An untrained encoder embeds positives and negatives at roughly
    /// equal distances, so the initial batch loss sits near the margin.
    #[test]
    fn initial_loss_is_near_margin() {
        let corpus = corpus(3);
        let split = WellSplit::all_train(&corpus);
        let margin = 1.0;
        let cfg = TrainConfig {
            epochs: 1,
            lr: 0.0, // no movement; epoch loss equals the initial loss
            ..config(5)
        };
        let (_, history) =
            train_triplet(&corpus, &split, DistanceMetric::Euclidean, 32, &cfg).unwrap();
        let loss = history.epochs[0].train_loss;
        assert!(
            loss > 0.0 && loss < 2.0 * margin,
            "initial loss {loss} should be near the margin"
        );
    }

    /// After training, most held-out triplets are correctly ordered.
    /// (A pronounced well-identity offset keeps this tiny-budget fixture
    /// learnable; the full-size architecture is exercised in the
    /// acceptance suite.)
    #[test]
    fn training_orders_held_out_triplets() {
        let corpus = generate_synthetic(
            &SynthSpec {
                n_classes: 2,
                wells_per_class: 4,
                well_length: 400,
                n_channels: 3,
                well_offset_sigma: 2.0,
                ..Default::default()
            },
            13,
        )
        .unwrap();
        let split = &k_fold_splits(&corpus, 4, 7).unwrap()[0];
        let (model, _) = train_triplet(
            &corpus,
            split,
            DistanceMetric::Euclidean,
            32,
            &TrainConfig {
                epochs: 3,
                train_size: 400,
                batch_size: 50,
                ..config(1)
            },
        )
        .unwrap();
        let held_out = subcorpus(&corpus, &split.test);
        let triplets =
            crate::sampler::make_triplets(&held_out, Task::Linking, 150, 100, 99).unwrap();
        let frac = triplet_separation(&model, &triplets, 100);
        assert!(frac >= 0.9, "separation {frac}");
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let corpus = corpus(17);
        let split = WellSplit::all_train(&corpus);
        let cfg = TrainConfig {
            epochs: 0,
            ..config(23)
        };
        let (trained, history) =
            train_triplet(&corpus, &split, DistanceMetric::Euclidean, 16, &cfg).unwrap();
        assert!(history.epochs.is_empty());
        let fresh = TripletModel::init(
            3,
            16,
            DistanceMetric::Euclidean,
            derive_seed(cfg.seed, "init", 0),
        );
        assert_eq!(
            trained.to_checkpoint().to_bytes(),
            fresh.to_checkpoint().to_bytes()
        );
    }
}
