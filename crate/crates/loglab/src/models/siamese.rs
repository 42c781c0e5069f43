//! Siamese and triplet encoders.
//!
//! Both run the same weight-shared LSTM over each interval. The siamese
//! variant scores a pair either through the three-layer FC head
//! (concat 32 -> 64 -> 32 -> 1, sigmoid) or by applying the Euclidean /
//! cosine similarity formulas to the two embeddings. The triplet
//! variant exposes the bare embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{
    col_cosine, col_norms, dropout, encode_batch, DistanceMetric, LstmParams, Tensor,
};
use crate::sampler::Interval;

use super::{Checkpoint, ModelError, NamedParam};

/// Similarity head placed on top of the siamese encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// FC(32,64) + ReLU + Dropout + FC(64,32) + ReLU + Dropout +
    /// FC(32,1) + Sigmoid on the concatenated embeddings.
    Fc3,
    Euclidean,
    Cosine,
}

impl Head {
    pub fn name(&self) -> &'static str {
        match self {
            Head::Fc3 => "fc3",
            Head::Euclidean => "euclidean",
            Head::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Option<Head> {
        match s {
            "fc3" => Some(Head::Fc3),
            "euclidean" => Some(Head::Euclidean),
            "cosine" => Some(Head::Cosine),
            _ => None,
        }
    }
}

pub const SIAMESE_HIDDEN: usize = 16;
pub const TRIPLET_HIDDEN: usize = 64;
pub const DROPOUT_P: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub head: Head,
    pub dropout: f64,
}

impl EncoderConfig {
    pub fn siamese(input_dim: usize, head: Head) -> EncoderConfig {
        EncoderConfig {
            input_dim,
            hidden: SIAMESE_HIDDEN,
            head,
            dropout: DROPOUT_P,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 || self.input_dim == 0 {
            return Err(ModelError::BadConfig(
                "hidden size and input dim must be positive".into(),
            ));
        }
        if self.head == Head::Fc3 && self.hidden != SIAMESE_HIDDEN {
            return Err(ModelError::BadConfig(format!(
                "the fc3 head expects hidden size {SIAMESE_HIDDEN} (its first layer takes \
                 2 x {SIAMESE_HIDDEN} = 32 inputs), got {}",
                self.hidden
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// The FC(32,64) + FC(64,32) + FC(32,1) stack of the fc3 head.
#[derive(Clone)]
pub struct FcStack {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
}

impl FcStack {
    fn init(rng: &mut ChaCha8Rng) -> FcStack {
        FcStack {
            w1: uniform_param(64, 32, rng),
            b1: Tensor::param(vec![64], vec![0.0; 64]),
            w2: uniform_param(32, 64, rng),
            b2: Tensor::param(vec![32], vec![0.0; 32]),
            w3: uniform_param(1, 32, rng),
            b3: Tensor::param(vec![1], vec![0.0]),
        }
    }

    fn tensors(&self) -> Vec<Tensor> {
        vec![
            self.w1.clone(),
            self.b1.clone(),
            self.w2.clone(),
            self.b2.clone(),
            self.w3.clone(),
            self.b3.clone(),
        ]
    }
}

fn uniform_param(out: usize, inp: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = 1.0 / (inp as f64).sqrt();
    let vals: Vec<f64> = (0..out * inp)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::param(vec![out, inp], vals)
}

/// Weight-shared pair model: one encoder, one head.
#[derive(Clone)]
pub struct SiameseModel {
    pub config: EncoderConfig,
    pub encoder: LstmParams,
    pub fc: Option<FcStack>,
}

impl SiameseModel {
    pub fn init(config: EncoderConfig, seed: u64) -> Result<SiameseModel, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = LstmParams::init(config.input_dim, config.hidden, &mut rng);
        let fc = match config.head {
            Head::Fc3 => Some(FcStack::init(&mut rng)),
            _ => None,
        };
        Ok(SiameseModel {
            config,
            encoder,
            fc,
        })
    }

    /// Every trainable tensor; there is exactly one encoder parameter
    /// set shared by both branches.
    pub fn params(&self) -> Vec<Tensor> {
        let mut p = self.encoder.tensors();
        if let Some(fc) = &self.fc {
            p.extend(fc.tensors());
        }
        p
    }

    /// Embed a batch of `l x d` intervals into `[hidden, B]`.
    pub fn embed_batch(&self, data: &[&[f64]], l: usize) -> Tensor {
        encode_batch(data, l, self.config.input_dim, &self.encoder)
    }

    /// Pair scores for a batch: the fc3 head emits probabilities in
    /// (0,1); the euclidean head emits Eq-style similarities in (0,1];
    /// the cosine head emits values in [-1,1]. `train` gates dropout.
    pub fn forward_pairs(
        &self,
        a: &[&[f64]],
        b: &[&[f64]],
        l: usize,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Tensor {
        let e_a = self.embed_batch(a, l);
        let e_b = self.embed_batch(b, l);
        match self.config.head {
            Head::Fc3 => {
                let fc = self.fc.as_ref().expect("fc3 head has an FC stack");
                let x = e_a.concat(&e_b); // [32, B]
                let h1 = fc.w1.matmul(&x).add_bias(&fc.b1).relu();
                let h1 = dropout(&h1, self.config.dropout, train, rng);
                let h2 = fc.w2.matmul(&h1).add_bias(&fc.b2).relu();
                let h2 = dropout(&h2, self.config.dropout, train, rng);
                let out = fc.w3.matmul(&h2).add_bias(&fc.b3).sigmoid(); // [1, B]
                let b_len = out.shape()[1];
                out.reshape(vec![b_len])
            }
            Head::Euclidean => {
                // 1 / (1 + ||e_a - e_b||) per column
                let d = col_norms(&e_a.sub(&e_b));
                let ones = Tensor::leaf(vec![d.len()], vec![1.0; d.len()]);
                ones.div(&d.add_scalar(1.0))
            }
            Head::Cosine => col_cosine(&e_a, &e_b),
        }
    }

    /// Scores mapped into (0,1) for cross-entropy training; identity for
    /// fc3 and euclidean heads, (score+1)/2 for the cosine head.
    pub fn forward_probabilities(
        &self,
        a: &[&[f64]],
        b: &[&[f64]],
        l: usize,
        train: bool,
        rng: &mut ChaCha8Rng,
    ) -> Tensor {
        let scores = self.forward_pairs(a, b, l, train, rng);
        match self.config.head {
            Head::Cosine => scores.add_scalar(1.0).scale(0.5),
            _ => scores,
        }
    }

    /// Eval-mode scores for interval pairs.
    pub fn score_pairs(&self, pairs: &[(&Interval, &Interval)], l: usize) -> Vec<f64> {
        if pairs.is_empty() {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a: Vec<&[f64]> = pairs.iter().map(|(x, _)| x.data()).collect();
        let b: Vec<&[f64]> = pairs.iter().map(|(_, y)| y.data()).collect();
        self.forward_pairs(&a, &b, l, false, &mut rng).to_vec()
    }

    pub fn arch_name(&self) -> String {
        format!("siamese-{}", self.config.head.name())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut params = vec![
            NamedParam::of("encoder.w_input", &self.encoder.w_input),
            NamedParam::of("encoder.w_recurrent", &self.encoder.w_recurrent),
            NamedParam::of("encoder.bias", &self.encoder.bias),
        ];
        if let Some(fc) = &self.fc {
            params.push(NamedParam::of("fc.w1", &fc.w1));
            params.push(NamedParam::of("fc.b1", &fc.b1));
            params.push(NamedParam::of("fc.w2", &fc.w2));
            params.push(NamedParam::of("fc.b2", &fc.b2));
            params.push(NamedParam::of("fc.w3", &fc.w3));
            params.push(NamedParam::of("fc.b3", &fc.b3));
        }
        Checkpoint::new(
            format!(
                "{};input_dim={};hidden={};dropout={}",
                self.arch_name(),
                self.config.input_dim,
                self.config.hidden,
                self.config.dropout
            ),
            params,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<SiameseModel, ModelError> {
        let arch = ck.arch();
        let head = arch
            .strip_prefix("siamese-")
            .and_then(Head::parse)
            .ok_or_else(|| ModelError::ArchitectureMismatch {
                expected: "siamese-*".into(),
                got: arch.to_string(),
            })?;
        let config = EncoderConfig {
            input_dim: ck.descriptor_field("input_dim")?,
            hidden: ck.descriptor_field("hidden")?,
            head,
            dropout: ck.descriptor_field("dropout")?,
        };
        config.validate()?;
        let encoder = LstmParams::from_tensors(
            ck.param_tensor("encoder.w_input")?,
            ck.param_tensor("encoder.w_recurrent")?,
            ck.param_tensor("encoder.bias")?,
        );
        let fc = match head {
            Head::Fc3 => Some(FcStack {
                w1: ck.param_tensor("fc.w1")?,
                b1: ck.param_tensor("fc.b1")?,
                w2: ck.param_tensor("fc.w2")?,
                b2: ck.param_tensor("fc.b2")?,
                w3: ck.param_tensor("fc.w3")?,
                b3: ck.param_tensor("fc.b3")?,
            }),
            _ => None,
        };
        Ok(SiameseModel {
            config,
            encoder,
            fc,
        })
    }
}

/// Contrastive encoder; similarity for evaluation applies the Euclidean
/// or cosine formula to the embeddings.
#[derive(Clone)]
pub struct TripletModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub metric: DistanceMetric,
    pub encoder: LstmParams,
}

impl TripletModel {
    pub fn init(input_dim: usize, hidden: usize, metric: DistanceMetric, seed: u64) -> TripletModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TripletModel {
            input_dim,
            hidden,
            metric,
            encoder: LstmParams::init(input_dim, hidden, &mut rng),
        }
    }

    pub fn params(&self) -> Vec<Tensor> {
        self.encoder.tensors()
    }

    pub fn embed_batch(&self, data: &[&[f64]], l: usize) -> Tensor {
        encode_batch(data, l, self.input_dim, &self.encoder)
    }

    /// Eval-mode embedding of one interval.
    pub fn embed(&self, interval: &Interval) -> Vec<f64> {
        self.embed_batch(&[interval.data()], interval.length).to_vec()
    }

    /// Similarity score for a pair of embeddings under this model's
    /// metric: Eq-style 1/(1+d) for Euclidean, plain cosine otherwise.
    pub fn embedding_score(&self, a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
        match self.metric {
            DistanceMetric::Euclidean => super::euclidean_similarity(a, b),
            DistanceMetric::CosineDistance => super::cosine_similarity(a, b),
        }
    }

    /// Eval-mode scores for interval pairs, batched.
    pub fn score_pairs(&self, pairs: &[(&Interval, &Interval)], l: usize) -> Vec<f64> {
        if pairs.is_empty() {
            return Vec::new();
        }
        let a: Vec<&[f64]> = pairs.iter().map(|(x, _)| x.data()).collect();
        let b: Vec<&[f64]> = pairs.iter().map(|(_, y)| y.data()).collect();
        let e_a = self.embed_batch(&a, l);
        let e_b = self.embed_batch(&b, l);
        let (ha, hb) = (e_a.to_vec(), e_b.to_vec());
        let (h, n) = (self.hidden, pairs.len());
        (0..n)
            .map(|j| {
                let col = |v: &Vec<f64>| -> Vec<f64> { (0..h).map(|i| v[i * n + j]).collect() };
                self.embedding_score(&col(&ha), &col(&hb))
                    .expect("trained embeddings are nonzero")
            })
            .collect()
    }

    pub fn metric_name(&self) -> &'static str {
        match self.metric {
            DistanceMetric::Euclidean => "euclid",
            DistanceMetric::CosineDistance => "cosine",
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            format!(
                "triplet-{};input_dim={};hidden={}",
                self.metric_name(),
                self.input_dim,
                self.hidden
            ),
            vec![
                NamedParam::of("encoder.w_input", &self.encoder.w_input),
                NamedParam::of("encoder.w_recurrent", &self.encoder.w_recurrent),
                NamedParam::of("encoder.bias", &self.encoder.bias),
            ],
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<TripletModel, ModelError> {
        let arch = ck.arch();
        let metric = match arch {
            "triplet-euclid" => DistanceMetric::Euclidean,
            "triplet-cosine" => DistanceMetric::CosineDistance,
            other => {
                return Err(ModelError::ArchitectureMismatch {
                    expected: "triplet-*".into(),
                    got: other.to_string(),
                })
            }
        };
        Ok(TripletModel {
            input_dim: ck.descriptor_field("input_dim")?,
            hidden: ck.descriptor_field("hidden")?,
            metric,
            encoder: LstmParams::from_tensors(
                ck.param_tensor("encoder.w_input")?,
                ck.param_tensor("encoder.w_recurrent")?,
                ck.param_tensor("encoder.bias")?,
            ),
        })
    }
}
