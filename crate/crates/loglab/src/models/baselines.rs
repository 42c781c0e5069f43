//! Logistic regression fit by full-batch gradient descent.

use std::collections::BTreeMap;

use super::{Checkpoint, ModelError, NamedParam};

const MAX_ITERS: usize = 10_000;
const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogReg {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        1.0 / (1.0 + (-z).exp())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            format!("logreg;dim={}", self.weights.len()),
            vec![
                NamedParam {
                    name: "weights".into(),
                    shape: vec![self.weights.len()],
                    values: self.weights.clone(),
                },
                NamedParam {
                    name: "bias".into(),
                    shape: vec![1],
                    values: vec![self.bias],
                },
            ],
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<LogReg, ModelError> {
        if ck.arch() != "logreg" {
            return Err(ModelError::ArchitectureMismatch {
                expected: "logreg".into(),
                got: ck.arch().to_string(),
            });
        }
        Ok(LogReg {
            weights: ck.param("weights")?.values.clone(),
            bias: ck.param("bias")?.values[0],
        })
    }
}

/// Full-batch gradient descent on the mean logistic loss until the
/// gradient norm drops below 1e-6 or 10k iterations pass. The step size
/// comes from the curvature bound of the logistic loss, so descent never
/// diverges.
pub fn train_logreg(features: &[Vec<f64>], labels: &[u8]) -> Result<LogReg, ModelError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(ModelError::DegenerateTraining(
            "empty or mismatched training set".into(),
        ));
    }
    let classes: BTreeMap<u8, usize> = labels.iter().fold(BTreeMap::new(), |mut m, &y| {
        *m.entry(y).or_default() += 1;
        m
    });
    if classes.len() < 2 {
        return Err(ModelError::DegenerateTraining(
            "all labels belong to one class".into(),
        ));
    }
    let dim = features[0].len();
    let n = features.len() as f64;

    // Hessian spectral norm is at most mean(|x|^2 + 1)/4 (bias included).
    let mean_sq: f64 = features
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .sum::<f64>()
        / n;
    let lr = 3.6 / mean_sq;

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    for _ in 0..MAX_ITERS {
        let mut grad_w = vec![0.0; dim];
        let mut grad_b = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
            let p = 1.0 / (1.0 + (-z).exp());
            let err = p - f64::from(y);
            for (g, v) in grad_w.iter_mut().zip(x) {
                *g += err * v;
            }
            grad_b += err;
        }
        for g in grad_w.iter_mut() {
            *g /= n;
        }
        grad_b /= n;
        let mut norm2 = grad_b * grad_b;
        for g in &grad_w {
            norm2 += g * g;
        }
        if norm2.sqrt() < GRAD_TOL {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= lr * g;
        }
        bias -= lr * grad_b;
    }
    Ok(LogReg { weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        let features: Vec<Vec<f64>> = vec![
            vec![2.0, 0.1],
            vec![1.5, -0.2],
            vec![-1.8, 0.3],
            vec![-2.2, -0.1],
        ];
        let labels = [1u8, 1, 0, 0];
        let model = train_logreg(&features, &labels).unwrap();
        for (x, &y) in features.iter().zip(&labels) {
            let predicted = u8::from(model.predict_proba(x) > 0.5);
            assert_eq!(predicted, y);
        }
    }

    #[test]
    fn identical_features_balanced_labels_predict_half() {
        let features: Vec<Vec<f64>> = vec![vec![3.0, -1.0]; 6];
        let labels = [1u8, 0, 1, 0, 1, 0];
        let model = train_logreg(&features, &labels).unwrap();
        let p = model.predict_proba(&features[0]);
        assert!((p - 0.5).abs() < 1e-6, "p {p}");
    }

    #[test]
    fn single_class_labels_rejected() {
        let features = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logreg(&features, &[1, 1]),
            Err(ModelError::DegenerateTraining(_))
        ));
    }

    /// Gradient descent against an exhaustive loss-surface grid search.
    /// Both feature values carry mixed labels so the optimum is finite
    /// and unique (closed form: w = b = ln(2)/2); a separable set has no
    /// finite optimum to compare against.
    #[test]
    fn weights_match_grid_search_oracle() {
        let features: Vec<Vec<f64>> =
            vec![vec![1.0], vec![1.0], vec![1.0], vec![-1.0], vec![-1.0]];
        let labels = [1u8, 1, 0, 0, 1];
        let model = train_logreg(&features, &labels).unwrap();

        let loss = |w: f64, b: f64| -> f64 {
            let mut total = 0.0;
            for (x, &y) in features.iter().zip(&labels) {
                let z = w * x[0] + b;
                let p = 1.0 / (1.0 + (-z).exp());
                total -= f64::from(y) * p.ln() + (1.0 - f64::from(y)) * (1.0 - p).ln();
            }
            total / features.len() as f64
        };
        // coarse-to-fine grid refinement around the optimum
        let (mut wc, mut bc, mut span) = (0.0, 0.0, 4.0);
        for _ in 0..24 {
            let mut best = (f64::INFINITY, wc, bc);
            let steps = 20;
            for i in 0..=steps {
                for j in 0..=steps {
                    let w = wc - span + 2.0 * span * i as f64 / steps as f64;
                    let b = bc - span + 2.0 * span * j as f64 / steps as f64;
                    let l = loss(w, b);
                    if l < best.0 {
                        best = (l, w, b);
                    }
                }
            }
            wc = best.1;
            bc = best.2;
            span *= 0.2;
        }
        assert!(
            (model.weights[0] - wc).abs() < 1e-3 && (model.bias - bc).abs() < 1e-3,
            "gd ({}, {}) vs grid ({wc}, {bc})",
            model.weights[0],
            model.bias
        );
        // and both agree with the closed form
        let closed = 0.5 * 2.0f64.ln();
        assert!((model.weights[0] - closed).abs() < 1e-3);
        assert!((model.bias - closed).abs() < 1e-3);
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = LogReg {
            weights: vec![0.5, -1.25, 3.0],
            bias: 0.125,
        };
        let ck = model.to_checkpoint();
        let back = LogReg::from_checkpoint(&ck).unwrap();
        assert_eq!(model, back);
    }
}
