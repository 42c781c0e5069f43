//! End-to-end well classification: an interval encoder feeding an
//! aggregation LSTM trained to predict the well's CLASS.
//!
//! Three regimes: pure (encoder and aggregator trained jointly from
//! scratch), only-aggregation (encoder loaded from a checkpoint and
//! frozen), and from-checkpoint (encoder loaded and fine-tuned while
//! the aggregator trains from scratch).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{
    cross_entropy_logits, dropout, encode_batch, AdamState, LstmParams, Tensor,
};
use crate::corpus::{Corpus, WellLog};
use crate::derive_seed;
use crate::models::{Checkpoint, ModelError, NamedParam};

use super::{subcorpus, EpochStats, History, TrainingError, WellSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Pure,
    OnlyAggregation,
    FromCheckpoint,
}

impl Regime {
    pub fn parse(s: &str) -> Option<Regime> {
        match s.to_ascii_lowercase().as_str() {
            "pure" => Some(Regime::Pure),
            "only-aggregation" | "only_aggregation" => Some(Regime::OnlyAggregation),
            "from-checkpoint" | "from_checkpoint" => Some(Regime::FromCheckpoint),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Pure => "pure",
            Regime::OnlyAggregation => "only-aggregation",
            Regime::FromCheckpoint => "from-checkpoint",
        }
    }

    /// Per-regime epoch defaults: 17 pure, 6 only-aggregation, 20
    /// from-checkpoint.
    pub fn default_epochs(&self) -> usize {
        match self {
            Regime::Pure => 17,
            Regime::OnlyAggregation => 6,
            Regime::FromCheckpoint => 20,
        }
    }
}

#[derive(Clone)]
pub struct EndToEndConfig {
    pub regime: Regime,
    /// Ignored when an encoder checkpoint supplies the hidden size.
    pub encoder_hidden: usize,
    pub aggregator_hidden: usize,
    pub dropout: f64,
    /// None picks the regime default.
    pub epochs: Option<usize>,
    pub lr: f64,
    pub seed: u64,
    pub interval_len: usize,
    pub encoder_checkpoint: Option<Checkpoint>,
}

impl Default for EndToEndConfig {
    fn default() -> Self {
        EndToEndConfig {
            regime: Regime::Pure,
            encoder_hidden: 64,
            aggregator_hidden: 32,
            dropout: 0.25,
            epochs: None,
            lr: 0.001,
            seed: 0,
            interval_len: crate::sampler::DEFAULT_INTERVAL_LEN,
            encoder_checkpoint: None,
        }
    }
}

/// Encoder, aggregation LSTM over the sequence of per-interval
/// embeddings, and a linear class head.
pub struct EndToEndModel {
    pub input_dim: usize,
    pub encoder_hidden: usize,
    pub aggregator_hidden: usize,
    pub class_ids: Vec<i64>,
    pub encoder: LstmParams,
    pub encoder_frozen: bool,
    pub aggregator: LstmParams,
    pub w_out: Tensor,
    pub b_out: Tensor,
    pub dropout: f64,
    pub interval_len: usize,
}

impl EndToEndModel {
    pub fn n_classes(&self) -> usize {
        self.class_ids.len()
    }

    /// Trainable tensors; the encoder is excluded when frozen.
    pub fn trainable_params(&self) -> Vec<Tensor> {
        let mut p = Vec::new();
        if !self.encoder_frozen {
            p.extend(self.encoder.tensors());
        }
        p.extend(self.aggregator.tensors());
        p.push(self.w_out.clone());
        p.push(self.b_out.clone());
        p
    }

    /// Class logits for one well: contiguous intervals are embedded,
    /// the aggregator LSTM reads the embedding sequence, and the last
    /// hidden state goes through ReLU, the linear head, and dropout.
    pub fn forward_logits(
        &self,
        well: &WellLog,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Tensor, TrainingError> {
        let l = self.interval_len;
        let k = well.len() / l;
        if k == 0 {
            return Err(TrainingError::NotEnoughWells {
                needed: 1,
                found: 0,
                what: "intervals in a well shorter than the interval length",
            });
        }
        let d = well.n_channels;
        let slices: Vec<&[f64]> = (0..k)
            .map(|i| &well.values[i * l * d..(i + 1) * l * d])
            .collect();
        let embeddings = encode_batch(&slices, l, d, &self.encoder); // [h, k]

        let mut h = Tensor::zeros(vec![self.aggregator_hidden, 1], false);
        let mut c = Tensor::zeros(vec![self.aggregator_hidden, 1], false);
        for t in 0..k {
            let x_t = embeddings.slice_cols(t, t + 1);
            let (h_t, c_t) = crate::autodiff::lstm_cell(&x_t, &h, &c, &self.aggregator);
            h = h_t;
            c = c_t;
        }
        let activated = h.relu();
        let logits = self.w_out.matmul(&activated).add_bias(&self.b_out);
        let logits = dropout(&logits, self.dropout, train, rng);
        Ok(logits.reshape(vec![self.n_classes()]))
    }

    /// Eval-mode prediction; returns the class label, not its index.
    pub fn predict_class(&self, well: &WellLog) -> Result<i64, TrainingError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let logits = self.forward_logits(well, false, &mut rng)?;
        let values = logits.to_vec();
        let argmax = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(self.class_ids[argmax])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let class_ids = self
            .class_ids
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let params = vec![
            NamedParam::of("encoder.w_input", &self.encoder.w_input),
            NamedParam::of("encoder.w_recurrent", &self.encoder.w_recurrent),
            NamedParam::of("encoder.bias", &self.encoder.bias),
            NamedParam::of("aggregator.w_input", &self.aggregator.w_input),
            NamedParam::of("aggregator.w_recurrent", &self.aggregator.w_recurrent),
            NamedParam::of("aggregator.bias", &self.aggregator.bias),
            NamedParam::of("out.weight", &self.w_out),
            NamedParam::of("out.bias", &self.b_out),
        ];
        Checkpoint::new(
            format!(
                "end-to-end;input_dim={};encoder_hidden={};aggregator_hidden={};n_classes={};dropout={};l={}",
                self.input_dim,
                self.encoder_hidden,
                self.aggregator_hidden,
                self.n_classes(),
                self.dropout,
                self.interval_len,
            ),
            params,
        )
        .with_meta("class_ids", &class_ids)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<EndToEndModel, ModelError> {
        if ck.arch() != "end-to-end" {
            return Err(ModelError::ArchitectureMismatch {
                expected: "end-to-end".into(),
                got: ck.arch().to_string(),
            });
        }
        let class_ids: Vec<i64> = ck
            .metadata
            .get("class_ids")
            .ok_or_else(|| ModelError::BadCheckpoint("missing class_ids metadata".into()))?
            .split(',')
            .map(|s| {
                s.parse()
                    .map_err(|_| ModelError::BadCheckpoint(format!("bad class id '{s}'")))
            })
            .collect::<Result<_, _>>()?;
        Ok(EndToEndModel {
            input_dim: ck.descriptor_field("input_dim")?,
            encoder_hidden: ck.descriptor_field("encoder_hidden")?,
            aggregator_hidden: ck.descriptor_field("aggregator_hidden")?,
            class_ids,
            encoder: LstmParams::from_tensors(
                ck.param_tensor("encoder.w_input")?,
                ck.param_tensor("encoder.w_recurrent")?,
                ck.param_tensor("encoder.bias")?,
            ),
            encoder_frozen: false,
            aggregator: LstmParams::from_tensors(
                ck.param_tensor("aggregator.w_input")?,
                ck.param_tensor("aggregator.w_recurrent")?,
                ck.param_tensor("aggregator.bias")?,
            ),
            w_out: ck.param_tensor("out.weight")?,
            b_out: ck.param_tensor("out.bias")?,
            dropout: ck.descriptor_field("dropout")?,
            interval_len: ck.descriptor_field("l")?,
        })
    }
}

/// Load encoder weights from a siamese/triplet/end-to-end checkpoint.
fn encoder_from_checkpoint(
    ck: &Checkpoint,
    input_dim: usize,
    frozen: bool,
) -> Result<(LstmParams, usize), TrainingError> {
    let hidden: usize = ck.descriptor_field("hidden").or_else(|_| {
        ck.descriptor_field("encoder_hidden")
    })?;
    let make = |name: &str| -> Result<Tensor, ModelError> {
        let p = ck.param(name)?;
        Ok(if frozen {
            Tensor::leaf(p.shape.clone(), p.values.clone())
        } else {
            Tensor::param(p.shape.clone(), p.values.clone())
        })
    };
    let params = LstmParams::from_tensors(
        make("encoder.w_input")?,
        make("encoder.w_recurrent")?,
        make("encoder.bias")?,
    );
    if params.input_dim() != input_dim {
        return Err(TrainingError::Model(ModelError::ArchitectureMismatch {
            expected: format!("encoder with input_dim={input_dim}"),
            got: format!("input_dim={}", params.input_dim()),
        }));
    }
    Ok((params, hidden))
}

/// Train the end-to-end classifier. Every training well must carry a
/// class label and at least two classes must be present.
pub fn train_end_to_end(
    corpus: &Corpus,
    split: &WellSplit,
    config: &EndToEndConfig,
) -> Result<(EndToEndModel, History), TrainingError> {
    super::assert_split_integrity(split);
    let train_corpus = subcorpus(corpus, &split.train);
    let val_corpus = subcorpus(corpus, &split.test);
    let l = config.interval_len;

    for w in &train_corpus.wells {
        if w.class_label.is_none() {
            return Err(TrainingError::UnlabeledWell(w.well_id.clone()));
        }
    }
    let mut class_ids: Vec<i64> = corpus.wells.iter().filter_map(|w| w.class_label).collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    if class_ids.len() < 2 {
        return Err(TrainingError::BadConfig(
            "end-to-end training needs at least two classes".into(),
        ));
    }
    let train_wells: Vec<&WellLog> = train_corpus.wells.iter().filter(|w| w.len() >= l).collect();
    if train_wells.is_empty() {
        return Err(TrainingError::NotEnoughWells {
            needed: 1,
            found: 0,
            what: "end-to-end training",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "e2e-init", 0));
    let (encoder, encoder_hidden, frozen) = match config.regime {
        Regime::Pure => (
            LstmParams::init(corpus.n_channels(), config.encoder_hidden, &mut rng),
            config.encoder_hidden,
            false,
        ),
        Regime::OnlyAggregation | Regime::FromCheckpoint => {
            let ck = config.encoder_checkpoint.as_ref().ok_or_else(|| {
                TrainingError::BadConfig(format!(
                    "the {} regime needs an encoder checkpoint",
                    config.regime.name()
                ))
            })?;
            let frozen = config.regime == Regime::OnlyAggregation;
            let (params, hidden) = encoder_from_checkpoint(ck, corpus.n_channels(), frozen)?;
            (params, hidden, frozen)
        }
    };
    let aggregator = LstmParams::init(encoder_hidden, config.aggregator_hidden, &mut rng);
    let bound = 1.0 / (config.aggregator_hidden as f64).sqrt();
    let n_classes = class_ids.len();
    let w_out = Tensor::param(
        vec![n_classes, config.aggregator_hidden],
        (0..n_classes * config.aggregator_hidden)
            .map(|_| rand::Rng::random_range(&mut rng, -bound..bound))
            .collect(),
    );
    let b_out = Tensor::param(vec![n_classes], vec![0.0; n_classes]);

    let model = EndToEndModel {
        input_dim: corpus.n_channels(),
        encoder_hidden,
        aggregator_hidden: config.aggregator_hidden,
        class_ids: class_ids.clone(),
        encoder,
        encoder_frozen: frozen,
        aggregator,
        w_out,
        b_out,
        dropout: config.dropout,
        interval_len: l,
    };

    let params = model.trainable_params();
    let mut adam = AdamState::new(&params, config.lr);
    let mut train_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "e2e-train", 0));
    let epochs = config.epochs.unwrap_or_else(|| config.regime.default_epochs());

    let mut history = History::default();
    let mut snapshot: Vec<Vec<f64>> = params.iter().map(|p| p.to_vec()).collect();
    let mut order: Vec<usize> = (0..train_wells.len()).collect();

    'epochs: for epoch in 1..=epochs {
        order.shuffle(&mut train_rng);
        let mut epoch_loss = 0.0;
        for &wi in &order {
            let well = train_wells[wi];
            let class_index = class_ids
                .iter()
                .position(|&c| c == well.class_label.expect("validated above"))
                .expect("class id registered");
            for p in &params {
                p.zero_grad();
            }
            let logits = model.forward_logits(well, true, &mut train_rng)?;
            let loss = cross_entropy_logits(&logits, class_index);
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
        }
        snapshot = params.iter().map(|p| p.to_vec()).collect();

        let mut stats = EpochStats {
            epoch,
            train_loss: epoch_loss / train_wells.len() as f64,
            val_roc_auc: None,
            val_pr_auc: None,
            val_accuracy: None,
        };
        if !val_corpus.wells.is_empty() {
            stats.val_accuracy = Some(well_accuracy(&model, &val_corpus)?);
        }
        history.epochs.push(stats);
    }
    Ok((model, history))
}

fn restore(params: &[Tensor], snapshot: &[Vec<f64>]) {
    for (p, s) in params.iter().zip(snapshot) {
        p.set_values(s);
    }
}

/// Fraction of labeled, long-enough wells whose class is predicted
/// correctly.
pub fn well_accuracy(model: &EndToEndModel, corpus: &Corpus) -> Result<f64, TrainingError> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for well in &corpus.wells {
        let (Some(class), true) = (well.class_label, well.len() >= model.interval_len) else {
            continue;
        };
        total += 1;
        if model.predict_class(well)? == class {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(TrainingError::NotEnoughWells {
            needed: 1,
            found: 0,
            what: "well-accuracy evaluation",
        });
    }
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::DistanceMetric;
    use crate::corpus::{generate_synthetic, SynthSpec};
    use crate::models::TripletModel;
    use crate::training::stratified_class_split;

    fn corpus() -> Corpus {
        generate_synthetic(
            &SynthSpec {
                n_classes: 3,
                wells_per_class: 4,
                well_length: 600,
                n_channels: 3,
                ..Default::default()
            },
            31,
        )
        .unwrap()
    }

    fn fast_config(regime: Regime) -> EndToEndConfig {
        EndToEndConfig {
            regime,
            encoder_hidden: 16,
            epochs: Some(8),
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn single_class_corpus_is_rejected() {
        let mut corpus = corpus();
        for w in &mut corpus.wells {
            w.class_label = Some(0);
        }
        let split = WellSplit::all_train(&corpus);
        assert!(matches!(
            train_end_to_end(&corpus, &split, &fast_config(Regime::Pure)),
            Err(TrainingError::BadConfig(_))
        ));
    }

    #[test]
    fn unlabeled_training_well_is_rejected() {
        let mut corpus = corpus();
        corpus.wells[0].class_label = None;
        let split = WellSplit::all_train(&corpus);
        assert!(matches!(
            train_end_to_end(&corpus, &split, &fast_config(Regime::Pure)),
            Err(TrainingError::UnlabeledWell(_))
        ));
    }

    #[test]
    fn only_aggregation_keeps_encoder_bytes_identical() {
        let corpus = corpus();
        let split = stratified_class_split(&corpus, 0.25, 3).unwrap();
        let encoder_ck = TripletModel::init(3, 16, DistanceMetric::Euclidean, 9).to_checkpoint();
        let before: Vec<Vec<f64>> = ["encoder.w_input", "encoder.w_recurrent", "encoder.bias"]
            .iter()
            .map(|n| encoder_ck.param(n).unwrap().values.clone())
            .collect();
        let config = EndToEndConfig {
            encoder_checkpoint: Some(encoder_ck),
            epochs: Some(3),
            ..fast_config(Regime::OnlyAggregation)
        };
        let (model, _) = train_end_to_end(&corpus, &split, &config).unwrap();
        let after = [
            model.encoder.w_input.to_vec(),
            model.encoder.w_recurrent.to_vec(),
            model.encoder.bias.to_vec(),
        ];
        for (b, a) in before.iter().zip(&after) {
            assert_eq!(b, a, "frozen encoder moved");
        }
        // gradient-flow audit: frozen tensors never accumulate
        for t in model.encoder.tensors() {
            assert!(t.grad().iter().all(|&g| g == 0.0));
            assert!(!t.requires_grad());
        }
    }

    #[test]
    fn from_checkpoint_regime_updates_encoder() {
        let corpus = corpus();
        let split = stratified_class_split(&corpus, 0.25, 3).unwrap();
        let encoder_ck = TripletModel::init(3, 16, DistanceMetric::Euclidean, 9).to_checkpoint();
        let before = encoder_ck.param("encoder.w_input").unwrap().values.clone();
        let config = EndToEndConfig {
            encoder_checkpoint: Some(encoder_ck),
            epochs: Some(2),
            ..fast_config(Regime::FromCheckpoint)
        };
        let (model, _) = train_end_to_end(&corpus, &split, &config).unwrap();
        assert_ne!(before, model.encoder.w_input.to_vec());
    }

    /// Pure training on the synthetic corpus beats chance on held-out
    /// wells by a clear margin.
    #[test]
    fn pure_training_beats_chance() {
        let corpus = corpus();
        let split = stratified_class_split(&corpus, 0.25, 11).unwrap();
        let config = EndToEndConfig {
            epochs: Some(15),
            ..fast_config(Regime::Pure)
        };
        let (model, history) = train_end_to_end(&corpus, &split, &config).unwrap();
        let val = subcorpus(&corpus, &split.test);
        let acc = well_accuracy(&model, &val).unwrap();
        assert!(
            acc > 1.0 / 3.0 + 0.2,
            "held-out accuracy {acc}, history {:?}",
            history.epochs.last()
        );
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let corpus = corpus();
        let split = stratified_class_split(&corpus, 0.25, 7).unwrap();
        let config = EndToEndConfig {
            epochs: Some(2),
            ..fast_config(Regime::Pure)
        };
        let (model, _) = train_end_to_end(&corpus, &split, &config).unwrap();
        let ck = model.to_checkpoint();
        let restored = EndToEndModel::from_checkpoint(&ck).unwrap();
        for well in &corpus.wells {
            assert_eq!(
                model.predict_class(well).unwrap(),
                restored.predict_class(well).unwrap()
            );
        }
        assert_eq!(ck.to_bytes(), restored.to_checkpoint().to_bytes());
    }
}
