//! Adam optimizer with bias correction.

use crate::{Error, Result};

use super::Tensor;

/// Adam hyperparameters. Defaults: lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Optimizer state for one parameter group (one network's tensors, in a
/// fixed order that must match every `step` call).
pub struct Adam {
    cfg: AdamConfig,
    t: u64,
    slots: Vec<Moments>,
}

impl Adam {
    /// Allocates zeroed first/second-moment buffers shaped like `params`.
    pub fn new(cfg: AdamConfig, params: &[&Tensor]) -> Self {
        let slots = params
            .iter()
            .map(|p| Moments { m: vec![0.0; p.len()], v: vec![0.0; p.len()] })
            .collect();
        Self { cfg, t: 0, slots }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update: `p -= lr * m_hat / (sqrt(v_hat) + eps)` per entry.
    /// Errors on non-finite gradients or if an update would produce
    /// non-finite parameters; parameters are untouched on error.
    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.slots.len() || grads.len() != self.slots.len() {
            return Err(Error::Shape {
                op: "adam_step",
                details: format!(
                    "{} params / {} grads for {} slots",
                    params.len(),
                    grads.len(),
                    self.slots.len()
                ),
            });
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != self.slots[i].m.len() {
                return Err(Error::Shape {
                    op: "adam_step",
                    details: format!("grad {} has len {}, expected {}", i, g.len(), self.slots[i].m.len()),
                });
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("adam gradient {i}")));
            }
        }

        self.t += 1;
        let b1t = 1.0 - self.cfg.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.cfg.beta2.powi(self.t as i32);
        for ((slot, param), g) in self.slots.iter_mut().zip(params).zip(grads) {
            let data = param.data_mut();
            for k in 0..data.len() {
                let gk = g[k];
                slot.m[k] = self.cfg.beta1 * slot.m[k] + (1.0 - self.cfg.beta1) * gk;
                slot.v[k] = self.cfg.beta2 * slot.v[k] + (1.0 - self.cfg.beta2) * gk * gk;
                let m_hat = slot.m[k] / b1t;
                let v_hat = slot.v[k] / b2t;
                data[k] -= self.cfg.learning_rate * m_hat / (v_hat.sqrt() + self.cfg.epsilon);
            }
            param.check_finite("adam updated parameter")?;
        }
        Ok(())
    }
}
