//! Partition-agreement metrics: Rand index and its chance-adjusted
//! form, mutual information with the hypergeometric adjustment, and the
//! entropy-based homogeneity / completeness / V-measure triple. All
//! entropies are natural-log.

use super::MetricsError;

/// An assignment of items to groups. Labels need not be contiguous and
/// every metric here ignores label permutations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition(pub Vec<i64>);

impl Partition {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

struct Contingency {
    /// `cells[i][j]` counts items with i-th distinct u-label and j-th
    /// distinct v-label.
    cells: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    n: usize,
}

fn contingency(u: &[i64], v: &[i64]) -> Result<Contingency, MetricsError> {
    if u.len() != v.len() {
        return Err(MetricsError::LengthMismatch {
            scores: u.len(),
            labels: v.len(),
        });
    }
    let mut u_labels: Vec<i64> = u.to_vec();
    u_labels.sort_unstable();
    u_labels.dedup();
    let mut v_labels: Vec<i64> = v.to_vec();
    v_labels.sort_unstable();
    v_labels.dedup();
    let mut cells = vec![vec![0usize; v_labels.len()]; u_labels.len()];
    for (a, b) in u.iter().zip(v) {
        let i = u_labels.binary_search(a).expect("u label present");
        let j = v_labels.binary_search(b).expect("v label present");
        cells[i][j] += 1;
    }
    let row_sums: Vec<usize> = cells.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..v_labels.len())
        .map(|j| cells.iter().map(|r| r[j]).sum())
        .collect();
    Ok(Contingency {
        cells,
        row_sums,
        col_sums,
        n: u.len(),
    })
}

/// Same grouping up to label permutation: exactly one nonzero cell per
/// row and per column.
fn equivalent(c: &Contingency) -> bool {
    let rows_ok = c
        .cells
        .iter()
        .all(|r| r.iter().filter(|&&x| x > 0).count() == 1);
    let cols_ok = (0..c.col_sums.len())
        .all(|j| c.cells.iter().filter(|r| r[j] > 0).count() == 1);
    rows_ok && cols_ok
}

fn comb2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Rand index and its adjusted-for-chance form. The adjustment uses the
/// contingency-table closed form of the expected index.
pub fn rand_ari(u: &[i64], v: &[i64]) -> Result<(f64, f64), MetricsError> {
    let c = contingency(u, v)?;
    if c.n < 2 {
        return Err(MetricsError::TooFewItems { needed: 2, got: c.n });
    }
    let pairs = comb2(c.n);
    let same_both: f64 = c.cells.iter().flatten().map(|&x| comb2(x)).sum();
    let same_u: f64 = c.row_sums.iter().map(|&x| comb2(x)).sum();
    let same_v: f64 = c.col_sums.iter().map(|&x| comb2(x)).sum();
    // agreements: same in both plus different in both
    let ri = (same_both + (pairs - same_u - same_v + same_both)) / pairs;

    let expected = same_u * same_v / pairs;
    let max_index = 0.5 * (same_u + same_v);
    let ari = if max_index == expected {
        // Both partitions trivial in the same way: all singletons or one
        // block; perfect match scores 1, anything else 0.
        if equivalent(&c) {
            1.0
        } else {
            0.0
        }
    } else {
        (same_both - expected) / (max_index - expected)
    };
    Ok((ri, ari))
}

/// Mutual information of the two partitions and its adjusted form
/// `(MI - E[MI]) / (mean(H(U), H(V)) - E[MI])`.
pub fn mi_ami(u: &[i64], v: &[i64]) -> Result<(f64, f64), MetricsError> {
    let c = contingency(u, v)?;
    if c.n < 2 {
        return Err(MetricsError::TooFewItems { needed: 2, got: c.n });
    }
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.cells.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let pij = nij as f64 / n;
            mi += pij * (n * nij as f64 / (c.row_sums[i] as f64 * c.col_sums[j] as f64)).ln();
        }
    }
    if equivalent(&c) {
        // Identical grouping is a perfect score by definition; this also
        // covers the degenerate single-cluster-both case.
        return Ok((mi, 1.0));
    }
    let h_u = entropy(&c.row_sums, c.n);
    let h_v = entropy(&c.col_sums, c.n);
    if h_u == 0.0 && h_v == 0.0 {
        // one cluster on both sides but not equivalent cannot happen;
        // kept for completeness
        return Ok((mi, 0.0));
    }
    let emi = expected_mi(&c);
    let denom = 0.5 * (h_u + h_v) - emi;
    let ami = if denom.abs() < 1e-15 {
        0.0
    } else {
        (mi - emi) / denom
    };
    Ok((mi, ami))
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with fixed marginals.
fn expected_mi(c: &Contingency) -> f64 {
    let n = c.n;
    // log-factorial table; all arguments are <= n
    let mut logfact = vec![0.0f64; n + 1];
    for k in 1..=n {
        logfact[k] = logfact[k - 1] + (k as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &c.row_sums {
        for &b in &c.col_sums {
            let lo = if a + b > n { a + b - n } else { 1 }.max(1);
            let hi = a.min(b);
            let mut nij = lo;
            while nij <= hi {
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (a as f64 * b as f64)).ln();
                let log_p = logfact[a] + logfact[b] + logfact[n - a] + logfact[n - b]
                    - logfact[n]
                    - logfact[nij]
                    - logfact[a - nij]
                    - logfact[b - nij]
                    - logfact[(n + nij) - a - b];
                emi += term * log_p.exp();
                nij += 1;
            }
        }
    }
    emi
}

/// Homogeneity, completeness, and their harmonic mean. `classes` is the
/// expert labelling, `clusters` the predicted one. When a side carries
/// no entropy its score is defined as 1 and flagged.
pub fn v_measure(classes: &[i64], clusters: &[i64]) -> Result<VMeasure, MetricsError> {
    let c = contingency(classes, clusters)?;
    if c.n == 0 {
        return Err(MetricsError::TooFewItems { needed: 1, got: 0 });
    }
    let n = c.n as f64;
    let h_classes = entropy(&c.row_sums, c.n);
    let h_clusters = entropy(&c.col_sums, c.n);

    // H(C|K): classes within each cluster
    let mut h_c_given_k = 0.0;
    for j in 0..c.col_sums.len() {
        for i in 0..c.row_sums.len() {
            let nij = c.cells[i][j];
            if nij == 0 {
                continue;
            }
            h_c_given_k -= (nij as f64 / n) * ((nij as f64) / (c.col_sums[j] as f64)).ln();
        }
    }
    // H(K|C): clusters within each class
    let mut h_k_given_c = 0.0;
    for (i, row) in c.cells.iter().enumerate() {
        for &nij in row {
            if nij == 0 {
                continue;
            }
            h_k_given_c -= (nij as f64 / n) * ((nij as f64) / (c.row_sums[i] as f64)).ln();
        }
    }

    let (homogeneity, h_flagged) = if h_classes == 0.0 {
        (1.0, true)
    } else {
        (1.0 - h_c_given_k / h_classes, false)
    };
    let (completeness, c_flagged) = if h_clusters == 0.0 {
        (1.0, true)
    } else {
        (1.0 - h_k_given_c / h_clusters, false)
    };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok(VMeasure {
        homogeneity,
        completeness,
        v,
        degenerate: h_flagged || c_flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMeasure {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v: f64,
    /// True when one side had zero entropy and its score was defined as 1.
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_partitions_score_exactly_one() {
        let u = vec![0, 0, 1, 1, 2, 2, 2];
        let relabeled = vec![5, 5, -1, -1, 9, 9, 9];
        let (_, ari) = rand_ari(&u, &relabeled).unwrap();
        assert_eq!(ari, 1.0);
        let (_, ami) = mi_ami(&u, &relabeled).unwrap();
        assert_eq!(ami, 1.0);
        let vm = v_measure(&u, &relabeled).unwrap();
        assert_eq!(vm.v, 1.0);
    }

    #[test]
    fn too_few_items_is_an_error() {
        assert!(rand_ari(&[1], &[1]).is_err());
    }

    /// RI against direct enumeration of all item pairs.
    #[test]
    fn rand_index_matches_pair_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = rng.random_range(2..=8usize);
            let u: Vec<i64> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let v: Vec<i64> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let (ri, _) = rand_ari(&u, &v).unwrap();
            let mut agree = 0usize;
            let mut total = 0usize;
            for i in 0..n {
                for j in i + 1..n {
                    total += 1;
                    let same_u = u[i] == u[j];
                    let same_v = v[i] == v[j];
                    if same_u == same_v {
                        agree += 1;
                    }
                }
            }
            assert_eq!(ri, agree as f64 / total as f64);
        }
    }

    #[test]
    fn random_relabeling_centers_ari_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 1000;
        let u: Vec<i64> = (0..n).map(|_| rng.random_range(0..8)).collect();
        let v: Vec<i64> = (0..n).map(|_| rng.random_range(0..8)).collect();
        let (_, ari) = rand_ari(&u, &v).unwrap();
        assert!(ari.abs() < 0.05, "ari {ari}");
        let (_, ami) = mi_ami(&u, &v).unwrap();
        assert!(ami.abs() < 0.05, "ami {ami}");
    }

    #[test]
    fn mutual_information_matches_hand_contingency() {
        // contingency [[2,1],[0,1]]: u = 0,0,0,1 ; v = 0,0,1,1
        let u = vec![0, 0, 0, 1];
        let v = vec![0, 0, 1, 1];
        let (mi, _) = mi_ami(&u, &v).unwrap();
        let expect = 0.5 * (4.0f64 * 2.0 / (3.0 * 2.0)).ln()
            + 0.25 * (4.0f64 * 1.0 / (3.0 * 2.0)).ln()
            + 0.25 * (4.0f64 * 1.0 / (1.0 * 2.0)).ln();
        assert!((mi - expect).abs() < 1e-12);
    }

    #[test]
    fn ami_of_identical_nondegenerate_partitions_is_one() {
        let u = vec![0, 1, 0, 1, 2, 2, 0];
        let (_, ami) = mi_ami(&u, &u).unwrap();
        assert!((ami - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_single_cluster_both_sides() {
        let u = vec![3, 3, 3, 3];
        let v = vec![7, 7, 7, 7];
        let (_, ami) = mi_ami(&u, &v).unwrap();
        assert_eq!(ami, 1.0); // same partition, flagged perfect
    }

    #[test]
    fn v_measure_perfect_match() {
        let u = vec![0, 0, 1, 1];
        let vm = v_measure(&u, &u).unwrap();
        assert_eq!((vm.homogeneity, vm.completeness, vm.v), (1.0, 1.0, 1.0));
    }

    #[test]
    fn one_mega_cluster_is_complete_but_not_homogeneous() {
        let classes = vec![0, 0, 1, 1];
        let clusters = vec![0, 0, 0, 0];
        let vm = v_measure(&classes, &clusters).unwrap();
        assert_eq!(vm.homogeneity, 0.0);
        assert_eq!(vm.completeness, 1.0);
        assert_eq!(vm.v, 0.0);
        assert!(vm.degenerate); // cluster side carried no entropy
    }

    /// h, c against a direct conditional-entropy computation.
    #[test]
    fn v_measure_matches_entropy_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(6..30usize);
            let classes: Vec<i64> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let clusters: Vec<i64> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let vm = v_measure(&classes, &clusters).unwrap();

            let nf = n as f64;
            let p = |count: usize| count as f64 / nf;
            let marg = |labels: &[i64]| -> Vec<(i64, usize)> {
                let mut m: std::collections::BTreeMap<i64, usize> = Default::default();
                for &l in labels {
                    *m.entry(l).or_default() += 1;
                }
                m.into_iter().collect()
            };
            let h = |labels: &[i64]| -> f64 {
                marg(labels)
                    .iter()
                    .map(|(_, c)| -p(*c) * p(*c).ln())
                    .sum()
            };
            let joint = {
                let mut m: std::collections::BTreeMap<(i64, i64), usize> = Default::default();
                for i in 0..n {
                    *m.entry((classes[i], clusters[i])).or_default() += 1;
                }
                m
            };
            let cluster_sizes: std::collections::BTreeMap<i64, usize> =
                marg(&clusters).into_iter().collect();
            let class_sizes: std::collections::BTreeMap<i64, usize> =
                marg(&classes).into_iter().collect();
            let mut h_c_k = 0.0;
            let mut h_k_c = 0.0;
            for ((class, cluster), count) in &joint {
                h_c_k -= p(*count) * (*count as f64 / cluster_sizes[cluster] as f64).ln();
                h_k_c -= p(*count) * (*count as f64 / class_sizes[class] as f64).ln();
            }
            if h(&classes) > 0.0 {
                assert!((vm.homogeneity - (1.0 - h_c_k / h(&classes))).abs() < 1e-12);
            }
            if h(&clusters) > 0.0 {
                assert!((vm.completeness - (1.0 - h_k_c / h(&clusters))).abs() < 1e-12);
            }
        }
    }

    proptest! {
        /// Relabeling either side never changes any clustering metric.
        #[test]
        fn metrics_invariant_under_relabeling(
            labels in proptest::collection::vec((0i64..4, 0i64..4), 2..40),
            offset in 1i64..100,
        ) {
            let u: Vec<i64> = labels.iter().map(|(a, _)| *a).collect();
            let v: Vec<i64> = labels.iter().map(|(_, b)| *b).collect();
            let relabeled: Vec<i64> = u.iter().map(|x| 1000 - offset * x).collect();
            let (ri_a, ari_a) = rand_ari(&u, &v).unwrap();
            let (ri_b, ari_b) = rand_ari(&relabeled, &v).unwrap();
            prop_assert!((ri_a - ri_b).abs() < 1e-12);
            prop_assert!((ari_a - ari_b).abs() < 1e-12);
            let (mi_a, ami_a) = mi_ami(&u, &v).unwrap();
            let (mi_b, ami_b) = mi_ami(&relabeled, &v).unwrap();
            prop_assert!((mi_a - mi_b).abs() < 1e-12);
            prop_assert!((ami_a - ami_b).abs() < 1e-12);
            let va = v_measure(&u, &v).unwrap();
            let vb = v_measure(&relabeled, &v).unwrap();
            prop_assert!((va.v - vb.v).abs() < 1e-12);
        }
    }
}
