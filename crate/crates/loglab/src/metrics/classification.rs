//! Threshold metrics and the two curve areas.

use super::MetricsError;

/// Raw confusion counts at one threshold; predicted positive means
/// score strictly above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / n.max(1) as f64
    }

    /// Precision, with a flag telling whether it was defined; reported
    /// as 1.0 when nothing was predicted positive.
    pub fn precision(&self) -> (f64, bool) {
        if self.tp + self.fp == 0 {
            (1.0, false)
        } else {
            (self.tp as f64 / (self.tp + self.fp) as f64, true)
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

pub fn confusion(scores: &[f64], labels: &[u8], threshold: f64) -> Confusion {
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (s, y) in scores.iter().zip(labels) {
        let predicted = *s > threshold;
        match (predicted, *y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// Area under the ROC step curve, computed as the rank statistic: the
/// probability that a random positive outscores a random negative, with
/// ties counted one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    check_lengths(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClassLabels);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average ranks over tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    let n = neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Area of the precision-recall step function in the average-precision
/// convention: sum of (R_i - R_{i-1}) * P_i over descending distinct
/// score thresholds.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    check_lengths(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// The decision threshold (midpoint between adjacent distinct scores)
/// that maximizes accuracy, used to turn distance-based similarity
/// scores into hard labels.
pub fn accuracy_best_threshold(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    if let (Some(first), Some(last)) = (distinct.first(), distinct.last()) {
        candidates.push(first - 1.0);
        for w in distinct.windows(2) {
            candidates.push((w[0] + w[1]) / 2.0);
        }
        candidates.push(last + 1.0);
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for t in candidates {
        let acc = confusion(scores, labels, t).accuracy();
        if acc > best.1 {
            best = (t, acc);
        }
    }
    (best.0, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_scores_are_perfect_at_half() {
        let scores = [0.9, 0.8, 0.1, 0.2];
        let labels = [1, 1, 0, 0];
        let c = confusion(&scores, &labels, 0.5);
        assert_eq!(c.accuracy(), 1.0);
        assert_eq!(c.precision(), (1.0, true));
        assert_eq!(c.recall(), 1.0);
    }

    #[test]
    fn all_predicted_negative_has_zero_recall() {
        let scores = [0.1, 0.2, 0.3];
        let labels = [1, 1, 0];
        let c = confusion(&scores, &labels, 0.9);
        assert_eq!(c.recall(), 0.0);
        assert_eq!(c.precision(), (1.0, false));
    }

    #[test]
    fn confusion_matches_per_item_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let scores: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u8> = (0..200).map(|_| u8::from(rng.random::<bool>())).collect();
        let threshold = 0.4;
        let c = confusion(&scores, &labels, threshold);
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for i in 0..200 {
            match (scores[i] > threshold, labels[i] == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (tp, fp, tn, fn_));
    }

    #[test]
    fn roc_auc_perfect_separation_is_one() {
        let scores = [0.9, 0.8, 0.7, 0.3, 0.2];
        let labels = [1, 1, 1, 0, 0];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn roc_auc_single_class_is_error() {
        assert!(roc_auc(&[0.5, 0.6], &[1, 1]).is_err());
    }

    /// Rank formula against the O(n^2) pairwise concordance definition.
    #[test]
    fn roc_auc_matches_concordance_oracle() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 401;
            // quantized scores so ties actually occur
            let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 20.0).round() / 20.0).collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
            if !labels.contains(&1) || !labels.contains(&0) {
                continue;
            }
            let fast = roc_auc(&scores, &labels).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                if labels[i] != 1 {
                    continue;
                }
                for j in 0..n {
                    if labels[j] != 0 {
                        continue;
                    }
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
            assert!((fast - num / den).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn roc_auc_near_half_for_random_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - 0.5).abs() < 0.02, "auc {auc}");
    }

    #[test]
    fn pr_auc_perfect_ranking_is_one() {
        let scores = [0.9, 0.8, 0.1, 0.05];
        let labels = [1, 1, 0, 0];
        assert_eq!(pr_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn pr_auc_constant_scores_equal_prevalence() {
        let scores = [0.7; 10];
        let mut labels = [0u8; 10];
        labels[0] = 1;
        labels[3] = 1;
        labels[7] = 1;
        let ap = pr_auc(&scores, &labels).unwrap();
        assert!((ap - 0.3).abs() < 1e-15);
    }

    /// Grouped computation against a naive sweep over every distinct
    /// threshold.
    #[test]
    fn pr_auc_matches_threshold_sweep_oracle() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 257;
            let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).round() / 8.0).collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.3)).collect();
            if !labels.contains(&1) {
                continue;
            }
            let fast = pr_auc(&scores, &labels).unwrap();

            let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
            let mut thresholds: Vec<f64> = scores.clone();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            thresholds.reverse();
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for t in thresholds {
                let mut tp = 0.0;
                let mut fp = 0.0;
                for i in 0..n {
                    if scores[i] >= t {
                        if labels[i] == 1 {
                            tp += 1.0;
                        } else {
                            fp += 1.0;
                        }
                    }
                }
                let recall = tp / pos;
                let precision = tp / (tp + fp);
                ap += (recall - prev_recall) * precision;
                prev_recall = recall;
            }
            assert!((fast - ap).abs() < 1e-12, "seed {seed}: {fast} vs {ap}");
        }
    }

    #[test]
    fn best_threshold_maximizes_accuracy() {
        let scores = [0.1, 0.3, 0.35, 0.8, 0.9];
        let labels = [0, 0, 1, 1, 1];
        let (t, acc) = accuracy_best_threshold(&scores, &labels);
        assert_eq!(acc, 1.0);
        assert!(t > 0.3 && t < 0.35);
    }

    proptest! {
        /// Strictly increasing transforms leave the ROC area unchanged.
        #[test]
        fn roc_auc_invariant_under_monotone_transform(
            raw in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 4..60)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s).collect();
            let labels: Vec<u8> = raw.iter().map(|(_, y)| u8::from(*y)).collect();
            prop_assume!(labels.contains(&1) && labels.contains(&0));
            let base = roc_auc(&scores, &labels).unwrap();
            let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
            let auc = roc_auc(&squashed, &labels).unwrap();
            prop_assert!((base - auc).abs() < 1e-12);
        }
    }
}
