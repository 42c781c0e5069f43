//! Interval sampling, pair labelling for the two linking tasks, triplet
//! mining, and the 2k aggregate feature vectors used by the classic
//! baselines.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, WellLog};

/// Default interval length in depth samples.
pub const DEFAULT_INTERVAL_LEN: usize = 100;
/// Maximum start-index gap for a close-linking positive.
pub const CLOSE_START_GAP: usize = 50;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SamplerError {
    #[error("well '{well_id}' has {len} samples, shorter than interval length {interval}")]
    WellTooShort {
        well_id: String,
        len: usize,
        interval: usize,
    },
    #[error("cannot stratify {task:?} pairs: {reason}")]
    ImpossibleStratification { task: Task, reason: String },
    #[error("need at least {needed} wells of length >= {interval}, found {found}")]
    NotEnoughWells {
        needed: usize,
        found: usize,
        interval: usize,
    },
    #[error("cannot write '{path}': {message}")]
    Io { path: String, message: String },
}

/// The two self-supervised labelling rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Positive iff both intervals come from the same well.
    Linking,
    /// Positive iff same well and start indices within
    /// [`CLOSE_START_GAP`] samples.
    CloseLinking,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        match s.to_ascii_lowercase().as_str() {
            "linking" => Some(Task::Linking),
            "close-linking" | "close_linking" | "closelinking" => Some(Task::CloseLinking),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Linking => "linking",
            Task::CloseLinking => "close-linking",
        }
    }
}

/// A fixed-length window of one well; borrows the well's data.
#[derive(Debug, Clone, Copy)]
pub struct Interval<'a> {
    pub well: &'a WellLog,
    pub start_index: usize,
    pub length: usize,
}

impl<'a> Interval<'a> {
    pub fn new(well: &'a WellLog, start_index: usize, length: usize) -> Interval<'a> {
        assert!(
            start_index + length <= well.len(),
            "interval {}..{} exceeds well '{}' of length {}",
            start_index,
            start_index + length,
            well.well_id,
            well.len()
        );
        Interval {
            well,
            start_index,
            length,
        }
    }

    pub fn well_id(&self) -> &str {
        &self.well.well_id
    }

    pub fn start_depth(&self) -> f64 {
        self.well.depths[self.start_index]
    }

    pub fn n_channels(&self) -> usize {
        self.well.n_channels
    }

    /// Row-major `length x d` window into the well's values.
    pub fn data(&self) -> &'a [f64] {
        let d = self.well.n_channels;
        &self.well.values[self.start_index * d..(self.start_index + self.length) * d]
    }
}

/// A labelled pair of intervals for classification-style training.
#[derive(Debug, Clone, Copy)]
pub struct PairExample<'a> {
    pub a: Interval<'a>,
    pub b: Interval<'a>,
    pub label: u8,
    pub task: Task,
}

/// Anchor/positive/negative intervals for contrastive training.
#[derive(Debug, Clone, Copy)]
pub struct TripletExample<'a> {
    pub anchor: Interval<'a>,
    pub positive: Interval<'a>,
    pub negative: Interval<'a>,
}

/// Per-channel means followed by per-channel population standard
/// deviations, `2k` values for `k` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Random,
    Contiguous,
}

/// Cut intervals out of one well. Random mode draws `count` uniform
/// starts; contiguous mode tiles the well with floor(n/l) non-overlapping
/// windows and ignores `count`.
pub fn sample_intervals<'a>(
    well: &'a WellLog,
    count: usize,
    l: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<Vec<Interval<'a>>, SamplerError> {
    let n = well.len();
    if n < l {
        return Err(SamplerError::WellTooShort {
            well_id: well.well_id.clone(),
            len: n,
            interval: l,
        });
    }
    match mode {
        SampleMode::Contiguous => Ok((0..n / l).map(|i| Interval::new(well, i * l, l)).collect()),
        SampleMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count)
                .map(|_| Interval::new(well, rng.random_range(0..=n - l), l))
                .collect())
        }
    }
}

/// The task's labelling rule; symmetric in its arguments.
pub fn label_pair(a: &Interval, b: &Interval, task: Task) -> u8 {
    let same_well = a.well_id() == b.well_id();
    match task {
        Task::Linking => u8::from(same_well),
        Task::CloseLinking => {
            let gap = a.start_index.abs_diff(b.start_index);
            u8::from(same_well && gap <= CLOSE_START_GAP)
        }
    }
}

/// Wells long enough to cut an interval of length `l`, in canonical
/// (well-id) order so the draw is independent of corpus ordering.
fn eligible_wells<'a>(corpus: &'a Corpus, l: usize) -> Vec<&'a WellLog> {
    let mut wells: Vec<&WellLog> = corpus.wells.iter().filter(|w| w.len() >= l).collect();
    wells.sort_by(|a, b| a.well_id.cmp(&b.well_id));
    wells
}

/// A stratified pair dataset: positives and negatives differ in count by
/// at most one, interleaved so truncation stays balanced.
pub fn make_pair_dataset<'a>(
    corpus: &'a Corpus,
    task: Task,
    size: usize,
    l: usize,
    seed: u64,
) -> Result<Vec<PairExample<'a>>, SamplerError> {
    let wells = eligible_wells(corpus, l);
    if wells.is_empty() {
        return Err(SamplerError::NotEnoughWells {
            needed: 1,
            found: 0,
            interval: l,
        });
    }
    if task == Task::Linking && wells.len() < 2 {
        return Err(SamplerError::ImpossibleStratification {
            task,
            reason: "negatives need at least two wells".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    let mut retries = 0usize;
    let retry_budget = 1000 * size.max(1);
    while out.len() < size {
        let want_positive = out.len() % 2 == 0;
        let example = if want_positive {
            draw_positive(&wells, task, l, &mut rng)
        } else {
            draw_negative(&wells, task, l, &mut rng)
        };
        match example {
            Some(e) => out.push(e),
            None => {
                retries += 1;
                if retries > retry_budget {
                    return Err(SamplerError::ImpossibleStratification {
                        task,
                        reason: format!(
                            "could not draw a {} pair",
                            if want_positive { "positive" } else { "negative" }
                        ),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn draw_positive<'a>(
    wells: &[&'a WellLog],
    task: Task,
    l: usize,
    rng: &mut ChaCha8Rng,
) -> Option<PairExample<'a>> {
    let well = wells[rng.random_range(0..wells.len())];
    let max_start = well.len() - l;
    let start_a = rng.random_range(0..=max_start);
    let start_b = match task {
        Task::Linking => rng.random_range(0..=max_start),
        Task::CloseLinking => {
            let lo = start_a.saturating_sub(CLOSE_START_GAP);
            let hi = (start_a + CLOSE_START_GAP).min(max_start);
            rng.random_range(lo..=hi)
        }
    };
    let a = Interval::new(well, start_a, l);
    let b = Interval::new(well, start_b, l);
    debug_assert_eq!(label_pair(&a, &b, task), 1);
    Some(PairExample {
        a,
        b,
        label: 1,
        task,
    })
}

fn draw_negative<'a>(
    wells: &[&'a WellLog],
    task: Task,
    l: usize,
    rng: &mut ChaCha8Rng,
) -> Option<PairExample<'a>> {
    match task {
        Task::Linking => {
            let ia = rng.random_range(0..wells.len());
            let mut ib = rng.random_range(0..wells.len() - 1);
            if ib >= ia {
                ib += 1;
            }
            let (wa, wb) = (wells[ia], wells[ib]);
            let a = Interval::new(wa, rng.random_range(0..=wa.len() - l), l);
            let b = Interval::new(wb, rng.random_range(0..=wb.len() - l), l);
            Some(PairExample {
                a,
                b,
                label: 0,
                task,
            })
        }
        Task::CloseLinking => {
            // Same-well far pairs count as negatives too, so draw two
            // uniform (well, start) locations and keep non-positives.
            let wa = wells[rng.random_range(0..wells.len())];
            let wb = wells[rng.random_range(0..wells.len())];
            let a = Interval::new(wa, rng.random_range(0..=wa.len() - l), l);
            let b = Interval::new(wb, rng.random_range(0..=wb.len() - l), l);
            if label_pair(&a, &b, task) == 0 {
                Some(PairExample {
                    a,
                    b,
                    label: 0,
                    task,
                })
            } else {
                None
            }
        }
    }
}

/// Triplets: anchors cycle over wells; each (anchor, positive) pair is
/// expanded with one negative interval from every other well before the
/// next anchor well is visited; the list is truncated at `size`.
pub fn make_triplets<'a>(
    corpus: &'a Corpus,
    task: Task,
    size: usize,
    l: usize,
    seed: u64,
) -> Result<Vec<TripletExample<'a>>, SamplerError> {
    let wells = eligible_wells(corpus, l);
    if wells.len() < 2 {
        return Err(SamplerError::NotEnoughWells {
            needed: 2,
            found: wells.len(),
            interval: l,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    let mut anchor_idx = 0usize;
    while out.len() < size {
        let well = wells[anchor_idx % wells.len()];
        anchor_idx += 1;
        let max_start = well.len() - l;
        let start_a = rng.random_range(0..=max_start);
        let start_p = match task {
            Task::Linking => rng.random_range(0..=max_start),
            Task::CloseLinking => {
                let lo = start_a.saturating_sub(CLOSE_START_GAP);
                let hi = (start_a + CLOSE_START_GAP).min(max_start);
                rng.random_range(lo..=hi)
            }
        };
        let anchor = Interval::new(well, start_a, l);
        let positive = Interval::new(well, start_p, l);
        for other in wells.iter().filter(|w| w.well_id != well.well_id) {
            if out.len() == size {
                break;
            }
            let start_n = rng.random_range(0..=other.len() - l);
            out.push(TripletExample {
                anchor,
                positive,
                negative: Interval::new(other, start_n, l),
            });
        }
    }
    Ok(out)
}

/// Aggregate an interval into its 2k feature vector: k channel means
/// first, then k population standard deviations.
pub fn featurize(interval: &Interval) -> FeatureVector {
    let d = interval.n_channels();
    let l = interval.length as f64;
    let data = interval.data();
    let mut values = vec![0.0; 2 * d];
    for ch in 0..d {
        let mut sum = 0.0;
        for t in 0..interval.length {
            sum += data[t * d + ch];
        }
        values[ch] = sum / l;
    }
    for ch in 0..d {
        let mean = values[ch];
        let mut ss = 0.0;
        for t in 0..interval.length {
            let diff = data[t * d + ch] - mean;
            ss += diff * diff;
        }
        values[d + ch] = (ss / l).sqrt();
    }
    FeatureVector { values }
}

/// Write pairs as `(well_a, start_a, well_b, start_b, label)` rows.
pub fn write_pairs_csv(path: &Path, pairs: &[PairExample]) -> Result<(), SamplerError> {
    let io_err = |e: csv::Error| SamplerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(["well_a", "start_a", "well_b", "start_b", "label"])
        .map_err(io_err)?;
    for p in pairs {
        w.write_record([
            p.a.well_id().to_string(),
            p.a.start_index.to_string(),
            p.b.well_id().to_string(),
            p.b.start_index.to_string(),
            p.label.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| SamplerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Write triplets as
/// `(well_a, start_a, well_p, start_p, well_n, start_n)` rows.
pub fn write_triplets_csv(path: &Path, triplets: &[TripletExample]) -> Result<(), SamplerError> {
    let io_err = |e: csv::Error| SamplerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(["well_a", "start_a", "well_p", "start_p", "well_n", "start_n"])
        .map_err(io_err)?;
    for t in triplets {
        w.write_record([
            t.anchor.well_id().to_string(),
            t.anchor.start_index.to_string(),
            t.positive.well_id().to_string(),
            t.positive.start_index.to_string(),
            t.negative.well_id().to_string(),
            t.negative.start_index.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| SamplerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, Channel, SynthSpec};
    use proptest::prelude::*;

    fn tiny_corpus() -> Corpus {
        let spec = SynthSpec {
            n_classes: 2,
            wells_per_class: 2,
            well_length: 300,
            n_channels: 2,
            ..Default::default()
        };
        generate_synthetic(&spec, 42).unwrap()
    }

    fn plain_well(id: &str, n: usize) -> WellLog {
        let depths: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        WellLog::new(id.into(), "F".into(), depths, values, 1).unwrap()
    }

    #[test]
    fn contiguous_mode_tiles_by_floor_division() {
        let well = plain_well("W", 250);
        let intervals = sample_intervals(&well, 99, 100, SampleMode::Contiguous, 0).unwrap();
        assert_eq!(intervals.len(), 2);
        assert_eq!(intervals[0].start_index, 0);
        assert_eq!(intervals[1].start_index, 100);
    }

    #[test]
    fn short_well_is_an_error() {
        let well = plain_well("W", 99);
        assert!(matches!(
            sample_intervals(&well, 1, 100, SampleMode::Random, 0),
            Err(SamplerError::WellTooShort { .. })
        ));
    }

    #[test]
    fn random_starts_are_deterministic_under_seed() {
        let well = plain_well("W", 1000);
        let a: Vec<usize> = sample_intervals(&well, 100, 100, SampleMode::Random, 9)
            .unwrap()
            .iter()
            .map(|i| i.start_index)
            .collect();
        let b: Vec<usize> = sample_intervals(&well, 100, 100, SampleMode::Random, 9)
            .unwrap()
            .iter()
            .map(|i| i.start_index)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn close_linking_label_rules() {
        let w1 = plain_well("W1", 400);
        let w2 = plain_well("W2", 400);
        let a0 = Interval::new(&w1, 0, 100);
        let a30 = Interval::new(&w1, 30, 100);
        let a50 = Interval::new(&w1, 50, 100);
        let a51 = Interval::new(&w1, 51, 100);
        let a200 = Interval::new(&w1, 200, 100);
        let b0 = Interval::new(&w2, 0, 100);

        assert_eq!(label_pair(&a0, &a30, Task::CloseLinking), 1);
        assert_eq!(label_pair(&a0, &a50, Task::CloseLinking), 1); // boundary inclusive
        assert_eq!(label_pair(&a0, &a51, Task::CloseLinking), 0);
        assert_eq!(label_pair(&a0, &a200, Task::CloseLinking), 0);
        assert_eq!(label_pair(&a0, &a200, Task::Linking), 1);
        assert_eq!(label_pair(&a0, &b0, Task::Linking), 0);
        assert_eq!(label_pair(&a0, &b0, Task::CloseLinking), 0);
    }

    #[test]
    fn pair_dataset_is_stratified_and_consistent() {
        let corpus = tiny_corpus();
        for task in [Task::Linking, Task::CloseLinking] {
            let pairs = make_pair_dataset(&corpus, task, 101, 100, 5).unwrap();
            assert_eq!(pairs.len(), 101);
            let pos = pairs.iter().filter(|p| p.label == 1).count();
            let neg = pairs.len() - pos;
            assert!(pos.abs_diff(neg) <= 1, "{task:?}: {pos} vs {neg}");
            for p in &pairs {
                assert_eq!(p.label, label_pair(&p.a, &p.b, task));
            }
        }
    }

    #[test]
    fn single_well_linking_is_impossible() {
        let channels = vec![Channel::named("GR")];
        let corpus = Corpus::new(channels, vec![plain_well("W", 400)]).unwrap();
        assert!(matches!(
            make_pair_dataset(&corpus, Task::Linking, 10, 100, 0),
            Err(SamplerError::ImpossibleStratification { .. })
        ));
    }

    #[test]
    fn pair_sampling_ignores_well_order() {
        let corpus = tiny_corpus();
        let mut reversed = corpus.clone();
        reversed.wells.reverse();
        let key = |p: &PairExample| {
            (
                p.a.well_id().to_string(),
                p.a.start_index,
                p.b.well_id().to_string(),
                p.b.start_index,
                p.label,
            )
        };
        for task in [Task::Linking, Task::CloseLinking] {
            let mut a: Vec<_> = make_pair_dataset(&corpus, task, 60, 100, 3)
                .unwrap()
                .iter()
                .map(key)
                .collect();
            let mut b: Vec<_> = make_pair_dataset(&reversed, task, 60, 100, 3)
                .unwrap()
                .iter()
                .map(key)
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn triplets_cover_every_other_well() {
        let channels = vec![Channel::named("GR")];
        let wells = vec![plain_well("A", 400), plain_well("B", 400), plain_well("C", 400)];
        let corpus = Corpus::new(channels, wells).unwrap();
        // one anchor-positive per well, expanded over both other wells
        let triplets = make_triplets(&corpus, Task::Linking, 6, 100, 1).unwrap();
        assert_eq!(triplets.len(), 6);
        let negs_for = |anchor: &str| -> Vec<String> {
            triplets
                .iter()
                .filter(|t| t.anchor.well_id() == anchor)
                .map(|t| t.negative.well_id().to_string())
                .collect()
        };
        assert_eq!(negs_for("A"), vec!["B".to_string(), "C".to_string()]);
        assert_eq!(negs_for("B"), vec!["A".to_string(), "C".to_string()]);
        assert_eq!(negs_for("C"), vec!["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn triplet_parts_validate_through_label_pair() {
        let corpus = tiny_corpus();
        for task in [Task::Linking, Task::CloseLinking] {
            let triplets = make_triplets(&corpus, task, 40, 100, 8).unwrap();
            for t in &triplets {
                assert_eq!(label_pair(&t.anchor, &t.positive, task), 1);
                assert_eq!(label_pair(&t.anchor, &t.negative, task), 0);
            }
        }
    }

    #[test]
    fn zero_size_requests_give_empty_datasets() {
        let corpus = tiny_corpus();
        assert!(make_triplets(&corpus, Task::Linking, 0, 100, 0).unwrap().is_empty());
        assert!(make_pair_dataset(&corpus, Task::Linking, 0, 100, 0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn featurize_constant_channel() {
        let n = 100;
        let depths: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let values: Vec<f64> = (0..n).flat_map(|i| [7.5, if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
        let well = WellLog::new("W".into(), "F".into(), depths, values, 2).unwrap();
        let f = featurize(&Interval::new(&well, 0, n));
        assert_eq!(f.values[0], 7.5);
        assert_eq!(f.values[1], 0.0); // mean of alternating +-1
        assert_eq!(f.values[2], 0.0); // constant channel std
        assert_eq!(f.values[3], 1.0); // alternating channel std
    }

    #[test]
    fn featurize_matches_two_pass_oracle() {
        let corpus = tiny_corpus();
        let well = &corpus.wells[0];
        let interval = Interval::new(well, 37, 100);
        let f = featurize(&interval);
        let d = well.n_channels;
        for ch in 0..d {
            let col: Vec<f64> = (0..100).map(|t| well.value(37 + t, ch)).collect();
            let mean = col.iter().sum::<f64>() / 100.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 100.0;
            assert!((f.values[ch] - mean).abs() < 1e-12);
            assert!((f.values[d + ch] - var.sqrt()).abs() < 1e-12);
        }
    }

    proptest! {
        /// label(a, b) == label(b, a) for both tasks, and close-linking
        /// positives are a subset of linking positives.
        #[test]
        fn label_symmetry_and_nesting(
            sa in 0usize..300,
            sb in 0usize..300,
            same_well in proptest::bool::ANY,
        ) {
            let w1 = plain_well("W1", 400);
            let w2 = plain_well("W2", 400);
            let a = Interval::new(&w1, sa, 100);
            let b = Interval::new(if same_well { &w1 } else { &w2 }, sb, 100);
            for task in [Task::Linking, Task::CloseLinking] {
                prop_assert_eq!(label_pair(&a, &b, task), label_pair(&b, &a, task));
            }
            if label_pair(&a, &b, Task::CloseLinking) == 1 {
                prop_assert_eq!(label_pair(&a, &b, Task::Linking), 1);
            }
        }
    }
}
