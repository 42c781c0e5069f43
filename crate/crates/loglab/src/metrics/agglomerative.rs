//! Bottom-up clustering with Ward linkage on Euclidean distance.
//!
//! Merge costs follow the Lance-Williams update on squared distances,
//! where the pairwise quantity maintained is
//! `D(A, B) = 2 |A||B| / (|A| + |B|) * ||mean(A) - mean(B)||^2`.
//! Ties are broken lexicographically on the (smaller id, larger id)
//! cluster pair, and merged clusters receive fresh increasing ids, so
//! the procedure is fully deterministic for identical input bytes; no
//! transcendental functions are involved.

use super::{clustering::Partition, MetricsError};

/// Cluster `points` down to exactly `k` groups; returns one label per
/// point, numbered by first occurrence.
pub fn agglomerative(points: &[Vec<f64>], k: usize) -> Result<Partition, MetricsError> {
    let n = points.len();
    if n == 0 || points.iter().any(|p| p.len() != points[0].len()) {
        return Err(MetricsError::BadPoints);
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MetricsError::BadPoints);
    }
    if k == 0 || k > n {
        return Err(MetricsError::KTooLarge { k, n });
    }

    // members[c] = point indices of active cluster c; sizes in lockstep.
    let mut next_id = n;
    let mut active: Vec<usize> = (0..n).collect();
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> =
        (0..n).map(|i| (i, vec![i])).collect();
    // squared-distance table keyed by unordered pair
    let mut dist: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist.insert((i, j), d2);
        }
    }

    while active.len() > k {
        // global minimum with lexicographic tie-break on the pair
        let mut best: Option<((usize, usize), f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let key = (a.min(b), a.max(b));
                let d = dist[&key];
                let better = match best {
                    None => true,
                    Some((bk, bd)) => d < bd || (d == bd && key < bk),
                };
                if better {
                    best = Some((key, d));
                }
            }
        }
        let ((a, b), d_ab) = best.expect("at least two active clusters");

        let sa = members[&a].len() as f64;
        let sb = members[&b].len() as f64;
        let merged_id = next_id;
        next_id += 1;

        // Lance-Williams (Ward) update for every other active cluster.
        for &c in active.iter().filter(|&&c| c != a && c != b) {
            let sc = members[&c].len() as f64;
            let d_ac = dist[&(a.min(c), a.max(c))];
            let d_bc = dist[&(b.min(c), b.max(c))];
            let d_new =
                ((sa + sc) * d_ac + (sb + sc) * d_bc - sc * d_ab) / (sa + sb + sc);
            dist.insert((c.min(merged_id), c.max(merged_id)), d_new);
        }

        let mut merged_members = members.remove(&a).expect("cluster a");
        merged_members.extend(members.remove(&b).expect("cluster b"));
        members.insert(merged_id, merged_members);
        active.retain(|&c| c != a && c != b);
        active.push(merged_id);
        dist.retain(|&(x, y), _| x != a && y != a && x != b && y != b);
    }

    // Label clusters by the smallest point index they contain so output
    // does not depend on merge bookkeeping.
    let mut groups: Vec<&Vec<usize>> = active.iter().map(|c| &members[c]).collect();
    groups.sort_by_key(|m| *m.iter().min().expect("nonempty cluster"));
    let mut assignment = vec![0i64; n];
    for (label, group) in groups.iter().enumerate() {
        for &p in *group {
            assignment[p] = label as i64;
        }
    }
    Ok(Partition(assignment))
}
