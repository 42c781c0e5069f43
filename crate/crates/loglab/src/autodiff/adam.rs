//! Adam with standard bias correction.

use super::Tensor;

/// A gradient became NaN or infinite; training should abort.
#[derive(Debug, Clone, thiserror::Error)]
#[error("non-finite gradient in parameter {param_index} at step {step}")]
pub struct NonFiniteGradient {
    pub param_index: usize,
    pub step: u64,
}

/// First/second moment buffers plus the step counter for one parameter
/// list. Defaults: lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8.
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &[Tensor], lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// One bias-corrected update from the parameters' current gradient
    /// buffers; gradients are left untouched (zero them per batch).
    pub fn step(&mut self, params: &[Tensor]) -> Result<(), NonFiniteGradient> {
        assert_eq!(params.len(), self.m.len(), "adam: parameter count changed");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (idx, p) in params.iter().enumerate() {
            let g = p.grad();
            if g.iter().any(|x| !x.is_finite()) {
                return Err(NonFiniteGradient {
                    param_index: idx,
                    step: self.t,
                });
            }
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let mut vals = p.to_vec();
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                vals[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.set_values(&vals);
        }
        Ok(())
    }
}
