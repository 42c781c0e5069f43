//! Losses: binary cross-entropy over probabilities, the triplet hinge
//! over embedding batches, and softmax cross-entropy from logits.

use super::{col_cosine, col_norms, Tensor};

/// Distance used between embeddings inside the triplet hinge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Euclidean,
    /// `1 - cosine similarity`, so larger means farther.
    CosineDistance,
}

/// Mean of `-[y ln p + (1-y) ln(1-p)]`; probabilities are clamped at
/// 1e-12 away from the endpoints.
pub fn bce_loss(p: &Tensor, labels: &[f64]) -> Tensor {
    assert_eq!(
        p.len(),
        labels.len(),
        "bce_loss: {} probabilities vs {} labels",
        p.len(),
        labels.len()
    );
    let n = labels.len();
    let shape = p.shape().to_vec();
    let pc = p.clamp(1e-12, 1.0 - 1e-12);
    let y = Tensor::leaf(shape.clone(), labels.to_vec());
    let one_minus_y = Tensor::leaf(shape.clone(), labels.iter().map(|v| 1.0 - v).collect());
    let one_minus_p = pc.scale(-1.0).add_scalar(1.0);
    let ll = y
        .mul(&pc.log())
        .add(&one_minus_y.mul(&one_minus_p.log()));
    ll.sum().scale(-1.0 / n as f64)
}

/// Mean over the batch of `max(d(a,p) - d(a,n) + margin, 0)` where the
/// embeddings are columns of `[h, B]` matrices.
pub fn triplet_loss(
    anchor: &Tensor,
    positive: &Tensor,
    negative: &Tensor,
    margin: f64,
    metric: DistanceMetric,
) -> Tensor {
    assert!(margin > 0.0, "triplet_loss: margin must be positive");
    let d_ap = embedding_distances(anchor, positive, metric);
    let d_an = embedding_distances(anchor, negative, metric);
    d_ap.sub(&d_an).add_scalar(margin).relu().mean()
}

/// Per-column distances between two `[h, B]` embedding matrices.
pub fn embedding_distances(a: &Tensor, b: &Tensor, metric: DistanceMetric) -> Tensor {
    match metric {
        DistanceMetric::Euclidean => col_norms(&a.sub(b)),
        DistanceMetric::CosineDistance => col_cosine(a, b).scale(-1.0).add_scalar(1.0),
    }
}

/// `log-sum-exp(logits) - logits[class]` for a 1-D logits vector. The
/// max shift uses a detached constant, which leaves both the value and
/// the gradient exact.
pub fn cross_entropy_logits(logits: &Tensor, class: usize) -> Tensor {
    assert_eq!(logits.shape().len(), 1, "cross_entropy_logits: need 1-D logits");
    let c = logits.len();
    assert!(class < c, "cross_entropy_logits: class {class} out of {c}");
    let m = logits
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.add_scalar(-m).exp().sum().log().add_scalar(m);
    lse.sub(&logits.slice_rows(class, class + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::finite_difference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bce_on_perfect_predictions_is_near_zero() {
        let p = Tensor::leaf(vec![4], vec![1.0, 0.0, 1.0, 0.0]);
        let loss = bce_loss(&p, &[1.0, 0.0, 1.0, 0.0]);
        assert!(loss.item() < 1e-10, "loss {}", loss.item());
    }

    #[test]
    fn bce_at_half_is_ln_two() {
        let p = Tensor::leaf(vec![3], vec![0.5; 3]);
        let loss = bce_loss(&p, &[1.0, 0.0, 1.0]);
        assert!((loss.item() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z0: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let labels: Vec<f64> = (0..6).map(|_| f64::from(rng.random::<bool>())).collect();
            // Go through a sigmoid so probabilities stay interior.
            let z = Tensor::param(vec![6], z0.clone());
            let loss = bce_loss(&z.sigmoid(), &labels);
            loss.backward();
            let analytic = z.grad();
            let numeric = finite_difference(&z0, 1e-5, |zv| {
                let z = Tensor::leaf(vec![6], zv.to_vec());
                bce_loss(&z.sigmoid(), &labels).item()
            });
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!((a - n).abs() / n.abs().max(1e-6) < 1e-4);
            }
        }
    }

    #[test]
    fn equal_distances_give_margin_loss() {
        let a = Tensor::leaf(vec![2, 2], vec![0.0, 1.0, 0.0, 0.0]);
        let p = Tensor::leaf(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let n = Tensor::leaf(vec![2, 2], vec![-1.0, 2.0, 0.0, -1.0]);
        // Both pairs sit at distance sqrt(2) per column.
        let loss = triplet_loss(&a, &p, &n, 0.7, DistanceMetric::Euclidean);
        assert_eq!(loss.item(), 0.7);
    }

    #[test]
    fn satisfied_triplets_have_zero_loss_and_gradient() {
        let a = Tensor::param(vec![2, 1], vec![0.0, 0.0]);
        let p = Tensor::leaf(vec![2, 1], vec![0.1, 0.0]);
        let n = Tensor::leaf(vec![2, 1], vec![5.0, 0.0]);
        let loss = triplet_loss(&a, &p, &n, 1.0, DistanceMetric::Euclidean);
        assert_eq!(loss.item(), 0.0);
        loss.backward();
        assert_eq!(a.grad(), vec![0.0, 0.0]);
    }

    #[test]
    fn batch_loss_equals_per_triplet_hinge_mean() {
        let (h, b) = (3usize, 8usize);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        };
        let (av, pv, nv) = (draw(h * b), draw(h * b), draw(h * b));
        let margin = 0.5;
        for metric in [DistanceMetric::Euclidean, DistanceMetric::CosineDistance] {
            let loss = triplet_loss(
                &Tensor::leaf(vec![h, b], av.clone()),
                &Tensor::leaf(vec![h, b], pv.clone()),
                &Tensor::leaf(vec![h, b], nv.clone()),
                margin,
                metric,
            )
            .item();
            // Scalar re-computation, one triplet at a time.
            let col = |v: &[f64], j: usize| -> Vec<f64> { (0..h).map(|i| v[i * b + j]).collect() };
            let dist = |x: &[f64], y: &[f64]| -> f64 {
                match metric {
                    DistanceMetric::Euclidean => {
                        let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                        (s + super::super::NORM_EPS).sqrt()
                    }
                    DistanceMetric::CosineDistance => {
                        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                        let nx = (x.iter().map(|a| a * a).sum::<f64>() + super::super::NORM_EPS)
                            .sqrt();
                        let ny = (y.iter().map(|a| a * a).sum::<f64>() + super::super::NORM_EPS)
                            .sqrt();
                        1.0 - dot / (nx * ny)
                    }
                }
            };
            let mut expect = 0.0;
            for j in 0..b {
                let (aj, pj, nj) = (col(&av, j), col(&pv, j), col(&nv, j));
                expect += (dist(&aj, &pj) - dist(&aj, &nj) + margin).max(0.0);
            }
            expect /= b as f64;
            assert!((loss - expect).abs() < 1e-12, "{metric:?}: {loss} vs {expect}");
        }
    }

    #[test]
    fn triplet_gradients_match_finite_differences() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(20 + seed);
            let (h, b) = (3usize, 4usize);
            let a0: Vec<f64> = (0..h * b).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let p0: Vec<f64> = (0..h * b).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n0: Vec<f64> = (0..h * b).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            for metric in [DistanceMetric::Euclidean, DistanceMetric::CosineDistance] {
                let a = Tensor::param(vec![h, b], a0.clone());
                let loss = triplet_loss(
                    &a,
                    &Tensor::leaf(vec![h, b], p0.clone()),
                    &Tensor::leaf(vec![h, b], n0.clone()),
                    1.0,
                    metric,
                );
                loss.backward();
                let analytic = a.grad();
                let numeric = finite_difference(&a0, 1e-5, |av| {
                    triplet_loss(
                        &Tensor::leaf(vec![h, b], av.to_vec()),
                        &Tensor::leaf(vec![h, b], p0.clone()),
                        &Tensor::leaf(vec![h, b], n0.clone()),
                        1.0,
                        metric,
                    )
                    .item()
                });
                for (x, y) in analytic.iter().zip(&numeric) {
                    assert!((x - y).abs() / y.abs().max(1e-6) < 1e-4, "{metric:?}");
                }
            }
        }
    }

    #[test]
    fn cross_entropy_matches_softmax_identity() {
        let logits = Tensor::param(vec![3], vec![1.0, -0.5, 0.25]);
        let loss = cross_entropy_logits(&logits, 0);
        // -ln softmax_0 computed directly
        let z: Vec<f64> = logits.to_vec();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        let expect = -(z[0].exp() / denom).ln();
        assert!((loss.item() - expect).abs() < 1e-12);
        loss.backward();
        let g = logits.grad();
        // gradient = softmax - onehot
        for (i, gi) in g.iter().enumerate() {
            let soft = z[i].exp() / denom;
            let expect = soft - if i == 0 { 1.0 } else { 0.0 };
            assert!((gi - expect).abs() < 1e-12);
        }
    }
}
