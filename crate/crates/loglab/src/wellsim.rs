//! Well-level similarity: lift interval embeddings or interval scores
//! to whole-series similarity.
//!
//! Embedding-level aggregation reduces each well's interval embeddings
//! to one vector and scores well pairs with the Euclidean or cosine
//! similarity formula. Score-level aggregation scores all sampled
//! cross-well interval pairs first and reduces the scores. The paper
//! that motivated this toolkit uses "micro"/"macro" for these two with
//! inconsistent assignments between sections, so the unambiguous names
//! are primary here and micro/macro are accepted as aliases
//! (micro = embedding-level, macro = score-level).

use std::path::Path;

use crate::corpus::Corpus;
use crate::metrics::{agglomerative, mi_ami, rand_ari, v_measure, MetricsError};
use crate::models::{
    cosine_similarity, euclidean_similarity, similarity_cosine_raw, similarity_euclidean_raw,
    Checkpoint, ModelError, SiameseModel, TripletModel,
};
use crate::sampler::{featurize, sample_intervals, Interval, SampleMode, SamplerError};

/// Hard cap on sampled intervals per well.
pub const MAX_INTERVALS_PER_WELL: usize = 1000;
/// Routine per-well interval budget.
pub const DEFAULT_INTERVALS_PER_WELL: usize = 100;

#[derive(Debug, Clone, thiserror::Error)]
pub enum WellSimError {
    #[error("no interval embeddings to aggregate")]
    EmptyEmbeddings,
    #[error("wells lack {target} labels: {wells:?}")]
    MissingLabels { target: String, wells: Vec<String> },
    #[error("target '{0}' applies to interval-level clustering only")]
    IntervalLevelTarget(String),
    #[error("no well is long enough to cut an interval of length {0}")]
    NoUsableWells(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write '{path}': {message}")]
    Io { path: String, message: String },
}

/// Componentwise reduction used on embeddings or scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggStrategy {
    Mean,
    Max,
    Min,
    Std,
}

impl AggStrategy {
    pub fn parse(s: &str) -> Option<AggStrategy> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Some(AggStrategy::Mean),
            "max" => Some(AggStrategy::Max),
            "min" => Some(AggStrategy::Min),
            "std" => Some(AggStrategy::Std),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AggStrategy::Mean => "mean",
            AggStrategy::Max => "max",
            AggStrategy::Min => "min",
            AggStrategy::Std => "std",
        }
    }

    pub const ALL: [AggStrategy; 4] = [
        AggStrategy::Mean,
        AggStrategy::Max,
        AggStrategy::Min,
        AggStrategy::Std,
    ];
}

/// Similarity formula applied between two aggregated embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMetric {
    Euclidean,
    Cosine,
}

impl SimMetric {
    fn score(&self, a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
        match self {
            SimMetric::Euclidean => euclidean_similarity(a, b),
            SimMetric::Cosine => cosine_similarity(a, b),
        }
    }
}

/// One well's aggregated embedding.
#[derive(Debug, Clone)]
pub struct WellEmbedding {
    pub well_id: String,
    pub vector: Vec<f64>,
    pub strategy: AggStrategy,
}

/// Symmetric well-by-well score matrix.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub well_ids: Vec<String>,
    scores: Vec<f64>,
    /// Wells shorter than the interval length, excluded from the matrix.
    pub excluded_wells: Vec<String>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.well_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.n() + j]
    }

    /// Row of scores against every well; usable as a feature vector.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.n()..(i + 1) * self.n()]
    }

    pub fn to_csv(&self, path: &Path) -> Result<(), WellSimError> {
        let io_err = |e: csv::Error| WellSimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        w.write_record(["well_a", "well_b", "score"]).map_err(io_err)?;
        for i in 0..self.n() {
            for j in 0..self.n() {
                w.write_record([
                    self.well_ids[i].clone(),
                    self.well_ids[j].clone(),
                    format!("{}", self.get(i, j)),
                ])
                .map_err(io_err)?;
            }
        }
        w.flush().map_err(|e| WellSimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Componentwise reduction of one well's interval embeddings; std uses
/// the population convention, so a single interval aggregates to the
/// zero vector under std.
pub fn aggregate_embeddings(
    embeddings: &[Vec<f64>],
    strategy: AggStrategy,
) -> Result<Vec<f64>, WellSimError> {
    if embeddings.is_empty() {
        return Err(WellSimError::EmptyEmbeddings);
    }
    let dim = embeddings[0].len();
    let n = embeddings.len() as f64;
    let mut out = vec![0.0; dim];
    match strategy {
        AggStrategy::Mean => {
            for e in embeddings {
                for (o, v) in out.iter_mut().zip(e) {
                    *o += v;
                }
            }
            for o in &mut out {
                *o /= n;
            }
        }
        AggStrategy::Max => {
            out.copy_from_slice(&embeddings[0]);
            for e in &embeddings[1..] {
                for (o, v) in out.iter_mut().zip(e) {
                    *o = o.max(*v);
                }
            }
        }
        AggStrategy::Min => {
            out.copy_from_slice(&embeddings[0]);
            for e in &embeddings[1..] {
                for (o, v) in out.iter_mut().zip(e) {
                    *o = o.min(*v);
                }
            }
        }
        AggStrategy::Std => {
            let mut mean = vec![0.0; dim];
            for e in embeddings {
                for (m, v) in mean.iter_mut().zip(e) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            for e in embeddings {
                for ((o, v), m) in out.iter_mut().zip(e).zip(&mean) {
                    *o += (v - m) * (v - m);
                }
            }
            for o in &mut out {
                *o = (*o / n).sqrt();
            }
        }
    }
    Ok(out)
}

/// A trained encoder loaded from a checkpoint, able to embed intervals.
pub enum IntervalEncoder {
    Siamese(SiameseModel),
    Triplet(TripletModel),
}

impl IntervalEncoder {
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<IntervalEncoder, ModelError> {
        if ck.arch().starts_with("siamese-") {
            Ok(IntervalEncoder::Siamese(SiameseModel::from_checkpoint(ck)?))
        } else if ck.arch().starts_with("triplet-") {
            Ok(IntervalEncoder::Triplet(TripletModel::from_checkpoint(ck)?))
        } else {
            Err(ModelError::ArchitectureMismatch {
                expected: "siamese-* or triplet-*".into(),
                got: ck.arch().to_string(),
            })
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            IntervalEncoder::Siamese(m) => m.config.hidden,
            IntervalEncoder::Triplet(m) => m.hidden,
        }
    }

    /// The natural embedding-comparison metric for this model; the fc3
    /// head carries none, so it defaults to Euclidean.
    pub fn native_metric(&self) -> SimMetric {
        match self {
            IntervalEncoder::Siamese(m) => match m.config.head {
                crate::models::Head::Cosine => SimMetric::Cosine,
                _ => SimMetric::Euclidean,
            },
            IntervalEncoder::Triplet(m) => match m.metric {
                crate::autodiff::DistanceMetric::CosineDistance => SimMetric::Cosine,
                crate::autodiff::DistanceMetric::Euclidean => SimMetric::Euclidean,
            },
        }
    }

    /// Embed intervals in eval mode, returned one vector per interval.
    pub fn embed_intervals(&self, intervals: &[Interval], l: usize) -> Vec<Vec<f64>> {
        if intervals.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(intervals.len());
        // batch to bound graph memory
        for chunk in intervals.chunks(128) {
            let data: Vec<&[f64]> = chunk.iter().map(|i| i.data()).collect();
            let e = match self {
                IntervalEncoder::Siamese(m) => m.embed_batch(&data, l),
                IntervalEncoder::Triplet(m) => m.embed_batch(&data, l),
            };
            let h = self.hidden();
            let b = chunk.len();
            let vals = e.to_vec();
            for j in 0..b {
                out.push((0..h).map(|i| vals[i * b + j]).collect());
            }
        }
        out
    }
}

/// Scores interval pairs: either a trained encoder plus an embedding
/// metric, or the raw-feature distance formulas.
pub enum IntervalScorer {
    Encoder(IntervalEncoder, SimMetric),
    RawEuclidean,
    RawCosine,
}

/// Deterministic per-well interval sample shared by the aggregation
/// entry points: up to `per_well` (capped at [`MAX_INTERVALS_PER_WELL`])
/// random intervals per well; wells shorter than `l` are excluded. The
/// per-well stream is derived from the well's data, so wells with
/// identical readings draw identical interval starts regardless of
/// their id or position in the corpus.
fn sample_per_well<'a>(
    corpus: &'a Corpus,
    per_well: usize,
    l: usize,
    seed: u64,
) -> Result<(Vec<&'a crate::corpus::WellLog>, Vec<Vec<Interval<'a>>>, Vec<String>), WellSimError> {
    let budget = per_well.min(MAX_INTERVALS_PER_WELL).max(1);
    let mut wells = Vec::new();
    let mut samples = Vec::new();
    let mut excluded = Vec::new();
    for well in &corpus.wells {
        if well.len() < l {
            excluded.push(well.well_id.clone());
            continue;
        }
        let count = budget.min(well.len() - l + 1);
        let intervals = sample_intervals(
            well,
            count,
            l,
            SampleMode::Random,
            crate::derive_seed(seed, "wellsim", content_hash(&well.values)),
        )?;
        wells.push(well);
        samples.push(intervals);
    }
    if wells.is_empty() {
        return Err(WellSimError::NoUsableWells(l));
    }
    Ok((wells, samples, excluded))
}

/// FNV-1a over the value bits.
fn content_hash(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Embedding-level (micro) aggregation: embed intervals, reduce per
/// well, then score well pairs with the similarity formula.
pub fn well_similarity_embedding_level(
    corpus: &Corpus,
    encoder: &IntervalEncoder,
    strategy: AggStrategy,
    intervals_per_well: usize,
    metric: SimMetric,
    l: usize,
    seed: u64,
) -> Result<(SimilarityMatrix, Vec<WellEmbedding>), WellSimError> {
    let (wells, samples, excluded) = sample_per_well(corpus, intervals_per_well, l, seed)?;
    let mut embeddings = Vec::with_capacity(wells.len());
    for (well, intervals) in wells.iter().zip(&samples) {
        let vectors = encoder.embed_intervals(intervals, l);
        embeddings.push(WellEmbedding {
            well_id: well.well_id.clone(),
            vector: aggregate_embeddings(&vectors, strategy)?,
            strategy,
        });
    }
    let n = wells.len();
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s = metric.score(&embeddings[i].vector, &embeddings[j].vector)?;
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok((
        SimilarityMatrix {
            well_ids: wells.iter().map(|w| w.well_id.clone()).collect(),
            scores,
            excluded_wells: excluded,
        },
        embeddings,
    ))
}

/// Score-level (macro) aggregation: score all sampled cross-well
/// interval pairs, then reduce the scores; the mean reduction is the
/// `1/(k_m k_n) * sum` formula over the sampled subset.
pub fn well_similarity_score_level(
    corpus: &Corpus,
    scorer: &IntervalScorer,
    reduce: AggStrategy,
    intervals_per_well: usize,
    l: usize,
    seed: u64,
) -> Result<SimilarityMatrix, WellSimError> {
    let (wells, samples, excluded) = sample_per_well(corpus, intervals_per_well, l, seed)?;
    let n = wells.len();

    // precompute per-interval representations once
    enum Rep {
        Embedded(Vec<Vec<f64>>),
        Raw,
    }
    let reps: Vec<Rep> = match scorer {
        IntervalScorer::Encoder(encoder, _) => samples
            .iter()
            .map(|ints| Rep::Embedded(encoder.embed_intervals(ints, l)))
            .collect(),
        _ => samples.iter().map(|_| Rep::Raw).collect(),
    };

    let pair_score = |wi: usize, a: usize, wj: usize, b: usize| -> Result<f64, WellSimError> {
        match (scorer, &reps[wi], &reps[wj]) {
            (IntervalScorer::Encoder(_, metric), Rep::Embedded(ea), Rep::Embedded(eb)) => {
                Ok(metric.score(&ea[a], &eb[b])?)
            }
            (IntervalScorer::RawEuclidean, ..) => {
                Ok(similarity_euclidean_raw(&samples[wi][a], &samples[wj][b])?)
            }
            (IntervalScorer::RawCosine, ..) => {
                Ok(similarity_cosine_raw(&samples[wi][a], &samples[wj][b])?)
            }
            _ => unreachable!("representation matches scorer"),
        }
    };

    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut all = Vec::with_capacity(samples[i].len() * samples[j].len());
            for a in 0..samples[i].len() {
                for b in 0..samples[j].len() {
                    all.push(pair_score(i, a, j, b)?);
                }
            }
            let s = reduce_scores(&all, reduce);
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix {
        well_ids: wells.iter().map(|w| w.well_id.clone()).collect(),
        scores,
        excluded_wells: excluded,
    })
}

fn reduce_scores(scores: &[f64], strategy: AggStrategy) -> f64 {
    let n = scores.len() as f64;
    match strategy {
        AggStrategy::Mean => scores.iter().sum::<f64>() / n,
        AggStrategy::Max => scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        AggStrategy::Min => scores.iter().cloned().fold(f64::INFINITY, f64::min),
        AggStrategy::Std => {
            let mean = scores.iter().sum::<f64>() / n;
            (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n).sqrt()
        }
    }
}

/// Mean 2k feature vector per well; the no-learning baseline the paper
/// calls feature clustering.
pub fn raw_feature_well_embeddings(
    corpus: &Corpus,
    intervals_per_well: usize,
    l: usize,
    seed: u64,
) -> Result<Vec<WellEmbedding>, WellSimError> {
    let (wells, samples, _) = sample_per_well(corpus, intervals_per_well, l, seed)?;
    let mut out = Vec::with_capacity(wells.len());
    for (well, intervals) in wells.iter().zip(&samples) {
        let feats: Vec<Vec<f64>> = intervals.iter().map(|i| featurize(i).values).collect();
        out.push(WellEmbedding {
            well_id: well.well_id.clone(),
            vector: aggregate_embeddings(&feats, AggStrategy::Mean)?,
            strategy: AggStrategy::Mean,
        });
    }
    Ok(out)
}

/// Which expert labelling a clustering is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterTarget {
    WellName,
    Class,
    ClassLayer,
}

impl ClusterTarget {
    pub fn parse(s: &str) -> Option<ClusterTarget> {
        match s.to_ascii_lowercase().as_str() {
            "wellname" | "well" => Some(ClusterTarget::WellName),
            "class" => Some(ClusterTarget::Class),
            "class-layer" | "class_layer" | "classlayer" => Some(ClusterTarget::ClassLayer),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClusterTarget::WellName => "wellname",
            ClusterTarget::Class => "class",
            ClusterTarget::ClassLayer => "class-layer",
        }
    }
}

/// Per-well true labels for a clustering target. CLASS+LAYER has no
/// single well-level value (layers vary along depth), so it is rejected
/// here and served by [`interval_labels`] instead.
pub fn well_labels(corpus: &Corpus, target: ClusterTarget) -> Result<Vec<i64>, WellSimError> {
    match target {
        ClusterTarget::WellName => Ok((0..corpus.wells.len() as i64).collect()),
        ClusterTarget::Class => {
            let missing: Vec<String> = corpus
                .wells
                .iter()
                .filter(|w| w.class_label.is_none())
                .map(|w| w.well_id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(WellSimError::MissingLabels {
                    target: "class".into(),
                    wells: missing,
                });
            }
            Ok(corpus.wells.iter().map(|w| w.class_label.unwrap()).collect())
        }
        ClusterTarget::ClassLayer => {
            Err(WellSimError::IntervalLevelTarget("class-layer".into()))
        }
    }
}

/// True labels for a set of intervals: the well they came from, its
/// class, or class paired with the interval's modal layer.
pub fn interval_labels(
    corpus: &Corpus,
    intervals: &[Interval],
    target: ClusterTarget,
) -> Result<Vec<i64>, WellSimError> {
    let well_index = |id: &str| -> i64 {
        corpus
            .wells
            .iter()
            .position(|w| w.well_id == id)
            .map(|p| p as i64)
            .unwrap_or(-1)
    };
    let mut out = Vec::with_capacity(intervals.len());
    for interval in intervals {
        let label = match target {
            ClusterTarget::WellName => well_index(interval.well_id()),
            ClusterTarget::Class => interval.well.class_label.ok_or_else(|| {
                WellSimError::MissingLabels {
                    target: "class".into(),
                    wells: vec![interval.well_id().to_string()],
                }
            })?,
            ClusterTarget::ClassLayer => {
                let class = interval.well.class_label.ok_or_else(|| {
                    WellSimError::MissingLabels {
                        target: "class".into(),
                        wells: vec![interval.well_id().to_string()],
                    }
                })?;
                let layers = interval.well.layer_labels.as_ref().ok_or_else(|| {
                    WellSimError::MissingLabels {
                        target: "layer".into(),
                        wells: vec![interval.well_id().to_string()],
                    }
                })?;
                let window = &layers[interval.start_index..interval.start_index + interval.length];
                let mut counts: std::collections::BTreeMap<i64, usize> = Default::default();
                for &l in window {
                    *counts.entry(l).or_default() += 1;
                }
                let modal = counts
                    .iter()
                    .max_by_key(|(_, &c)| c)
                    .map(|(&l, _)| l)
                    .unwrap_or(0);
                class * 10_000 + modal
            }
        };
        out.push(label);
    }
    Ok(out)
}

/// ARI, AMI, and V-measure of an agglomerative clustering of `features`
/// against `true_labels`; `k` defaults to the number of distinct labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterReport {
    pub k: usize,
    pub ari: f64,
    pub ami: f64,
    pub v_measure: f64,
}

pub fn evaluate_clustering(
    features: &[Vec<f64>],
    true_labels: &[i64],
    k: Option<usize>,
) -> Result<ClusterReport, WellSimError> {
    let mut distinct: Vec<i64> = true_labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let k = k.unwrap_or(distinct.len()).max(1);
    let partition = agglomerative(features, k)?;
    let (_, ari) = rand_ari(&partition.0, true_labels)?;
    let (_, ami) = mi_ami(&partition.0, true_labels)?;
    let vm = v_measure(true_labels, &partition.0)?;
    Ok(ClusterReport {
        k,
        ari,
        ami,
        v_measure: vm.v,
    })
}

/// Cluster wells from their embeddings (or score-matrix rows) against a
/// well-level target.
pub fn evaluate_well_clustering(
    embeddings: &[WellEmbedding],
    corpus: &Corpus,
    target: ClusterTarget,
) -> Result<ClusterReport, WellSimError> {
    // align label order with the embedding order
    let by_id: std::collections::BTreeMap<&str, usize> = corpus
        .wells
        .iter()
        .enumerate()
        .map(|(i, w)| (w.well_id.as_str(), i))
        .collect();
    let all_labels = well_labels(corpus, target)?;
    let labels: Vec<i64> = embeddings
        .iter()
        .map(|e| all_labels[by_id[e.well_id.as_str()]])
        .collect();
    let features: Vec<Vec<f64>> = embeddings.iter().map(|e| e.vector.clone()).collect();
    evaluate_clustering(&features, &labels, None)
}

/// Same evaluation with similarity-matrix rows as the feature vectors.
pub fn evaluate_matrix_clustering(
    matrix: &SimilarityMatrix,
    corpus: &Corpus,
    target: ClusterTarget,
) -> Result<ClusterReport, WellSimError> {
    let by_id: std::collections::BTreeMap<&str, usize> = corpus
        .wells
        .iter()
        .enumerate()
        .map(|(i, w)| (w.well_id.as_str(), i))
        .collect();
    let all_labels = well_labels(corpus, target)?;
    let labels: Vec<i64> = matrix
        .well_ids
        .iter()
        .map(|id| all_labels[by_id[id.as_str()]])
        .collect();
    let features: Vec<Vec<f64>> = (0..matrix.n()).map(|i| matrix.row(i).to_vec()).collect();
    evaluate_clustering(&features, &labels, None)
}

/// Well-embedding CSV: `well_id, e_1..e_h`.
pub fn embeddings_to_csv(path: &Path, embeddings: &[WellEmbedding]) -> Result<(), WellSimError> {
    let io_err = |e: csv::Error| WellSimError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let dim = embeddings.first().map(|e| e.vector.len()).unwrap_or(0);
    let mut header = vec!["well_id".to_string()];
    header.extend((1..=dim).map(|i| format!("e_{i}")));
    w.write_record(&header).map_err(io_err)?;
    for e in embeddings {
        let mut row = vec![e.well_id.clone()];
        row.extend(e.vector.iter().map(|v| format!("{v}")));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| WellSimError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::DistanceMetric;
    use crate::corpus::{generate_synthetic, SynthSpec};
    use crate::models::TripletModel;

    fn corpus() -> Corpus {
        generate_synthetic(
            &SynthSpec {
                n_classes: 2,
                wells_per_class: 3,
                well_length: 400,
                n_channels: 3,
                ..Default::default()
            },
            19,
        )
        .unwrap()
    }

    fn encoder() -> IntervalEncoder {
        IntervalEncoder::Triplet(TripletModel::init(3, 8, DistanceMetric::Euclidean, 4))
    }

    #[test]
    fn single_interval_aggregates_are_degenerate() {
        let e = vec![vec![1.0, -2.0, 3.0]];
        for strategy in [AggStrategy::Mean, AggStrategy::Max, AggStrategy::Min] {
            assert_eq!(aggregate_embeddings(&e, strategy).unwrap(), e[0]);
        }
        assert_eq!(
            aggregate_embeddings(&e, AggStrategy::Std).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn mean_of_opposite_vectors_is_zero() {
        let e = vec![vec![1.0, -2.0], vec![-1.0, 2.0]];
        assert_eq!(
            aggregate_embeddings(&e, AggStrategy::Mean).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn empty_aggregation_is_an_error() {
        assert!(matches!(
            aggregate_embeddings(&[], AggStrategy::Mean),
            Err(WellSimError::EmptyEmbeddings)
        ));
    }

    /// Componentwise reductions against an independent per-component
    /// loop.
    #[test]
    fn aggregation_matches_reduction_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let embeddings: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect();
        for strategy in AggStrategy::ALL {
            let fast = aggregate_embeddings(&embeddings, strategy).unwrap();
            for c in 0..5 {
                let col: Vec<f64> = embeddings.iter().map(|e| e[c]).collect();
                let expect = match strategy {
                    AggStrategy::Mean => col.iter().sum::<f64>() / 10.0,
                    AggStrategy::Max => col.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    AggStrategy::Min => col.iter().cloned().fold(f64::INFINITY, f64::min),
                    AggStrategy::Std => {
                        let m = col.iter().sum::<f64>() / 10.0;
                        (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 10.0).sqrt()
                    }
                };
                assert!((fast[c] - expect).abs() < 1e-12, "{strategy:?}");
            }
        }
    }

    #[test]
    fn duplicated_well_scores_unit_similarity() {
        let mut corpus = corpus();
        let mut dup = corpus.wells[0].clone();
        dup.well_id = "DUP".into();
        corpus.wells.push(dup);
        let (matrix, _) = well_similarity_embedding_level(
            &corpus,
            &encoder(),
            AggStrategy::Mean,
            20,
            SimMetric::Euclidean,
            100,
            9,
        )
        .unwrap();
        let i = matrix.well_ids.iter().position(|w| w == "C0W00").unwrap();
        let j = matrix.well_ids.iter().position(|w| w == "DUP").unwrap();
        // identical data draws identical interval starts, so the two
        // aggregated embeddings coincide and Eq-style similarity is 1
        let s = matrix.get(i, j);
        assert_eq!(s, 1.0, "duplicate well similarity {s}");
        for a in 0..matrix.n() {
            for b in 0..matrix.n() {
                assert!((matrix.get(a, b) - matrix.get(b, a)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn score_level_reductions_are_ordered() {
        let corpus = corpus();
        let scorer = IntervalScorer::Encoder(encoder(), SimMetric::Euclidean);
        let mx = |reduce| {
            well_similarity_score_level(&corpus, &scorer, reduce, 10, 100, 3).unwrap()
        };
        let (mean, max, min) = (
            mx(AggStrategy::Mean),
            mx(AggStrategy::Max),
            mx(AggStrategy::Min),
        );
        for i in 0..mean.n() {
            for j in 0..mean.n() {
                assert!(max.get(i, j) >= mean.get(i, j) - 1e-12);
                assert!(mean.get(i, j) >= min.get(i, j) - 1e-12);
            }
        }
    }

    /// Mean reduction against the hand-summed double sum.
    #[test]
    fn score_level_mean_matches_double_sum() {
        let corpus = {
            let mut c = corpus();
            c.wells.truncate(3);
            c
        };
        let enc = encoder();
        let per_well = 4;
        let l = 100;
        let seed = 77;
        let scorer = IntervalScorer::Encoder(enc, SimMetric::Euclidean);
        let matrix =
            well_similarity_score_level(&corpus, &scorer, AggStrategy::Mean, per_well, l, seed)
                .unwrap();

        // recompute with the same sampling streams
        let enc2 = encoder();
        for (i, wi) in corpus.wells.iter().enumerate() {
            for (j, wj) in corpus.wells.iter().enumerate() {
                let ints_i = sample_intervals(
                    wi,
                    per_well,
                    l,
                    SampleMode::Random,
                    crate::derive_seed(seed, "wellsim", content_hash(&wi.values)),
                )
                .unwrap();
                let ints_j = sample_intervals(
                    wj,
                    per_well,
                    l,
                    SampleMode::Random,
                    crate::derive_seed(seed, "wellsim", content_hash(&wj.values)),
                )
                .unwrap();
                let ei = enc2.embed_intervals(&ints_i, l);
                let ej = enc2.embed_intervals(&ints_j, l);
                let mut total = 0.0;
                for a in &ei {
                    for b in &ej {
                        total += euclidean_similarity(a, b).unwrap();
                    }
                }
                let expect = total / (ei.len() * ej.len()) as f64;
                assert!(
                    (matrix.get(i, j) - expect).abs() < 1e-12,
                    "({i},{j}): {} vs {expect}",
                    matrix.get(i, j)
                );
            }
        }
    }

    #[test]
    fn short_wells_are_excluded_and_reported() {
        let mut corpus = corpus();
        let short = crate::corpus::WellLog::new(
            "SHORT".into(),
            "F".into(),
            (0..50).map(|i| i as f64).collect(),
            vec![0.5; 150],
            3,
        )
        .unwrap();
        corpus.wells.push(short);
        let (matrix, _) = well_similarity_embedding_level(
            &corpus,
            &encoder(),
            AggStrategy::Mean,
            10,
            SimMetric::Euclidean,
            100,
            1,
        )
        .unwrap();
        assert_eq!(matrix.excluded_wells, vec!["SHORT".to_string()]);
        assert!(!matrix.well_ids.contains(&"SHORT".to_string()));
    }

    #[test]
    fn perfect_labels_cluster_perfectly() {
        // features equal to the labels separate trivially
        let features: Vec<Vec<f64>> = [0.0, 0.01, 1.0, 1.01, 2.0, 2.01]
            .iter()
            .map(|&v| vec![v])
            .collect();
        let labels = vec![0i64, 0, 1, 1, 2, 2];
        let report = evaluate_clustering(&features, &labels, None).unwrap();
        assert_eq!(report.k, 3);
        assert_eq!(report.ari, 1.0);
        assert_eq!(report.ami, 1.0);
        assert_eq!(report.v_measure, 1.0);
    }

    #[test]
    fn shuffled_labels_cluster_near_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let features: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let labels: Vec<i64> = (0..60).map(|_| rng.random_range(0..3)).collect();
        let report = evaluate_clustering(&features, &labels, None).unwrap();
        assert!(report.ari.abs() < 0.2, "ari {}", report.ari);
    }

    #[test]
    fn class_layer_target_is_interval_level_only() {
        let corpus = corpus();
        assert!(matches!(
            well_labels(&corpus, ClusterTarget::ClassLayer),
            Err(WellSimError::IntervalLevelTarget(_))
        ));
    }

    #[test]
    fn missing_class_labels_are_reported() {
        let mut corpus = corpus();
        corpus.wells[2].class_label = None;
        match well_labels(&corpus, ClusterTarget::Class) {
            Err(WellSimError::MissingLabels { wells, .. }) => {
                assert_eq!(wells, vec![corpus.wells[2].well_id.clone()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
