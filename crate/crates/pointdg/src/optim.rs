//! AdamW with decoupled weight decay, and the cosine learning-rate schedule.

use crate::autodiff::Node;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamW {
    pub fn new(params: &[Node], beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        let m = params
            .iter()
            .map(|p| Tensor::zeros(&p.shape()))
            .collect();
        let v = params
            .iter()
            .map(|p| Tensor::zeros(&p.shape()))
            .collect();
        AdamW {
            beta1,
            beta2,
            eps,
            weight_decay,
            m,
            v,
            t: 0,
        }
    }

    /// One optimizer step over `params` (same list and order as `new`).
    /// Weight decay is applied directly to the parameter, not via the
    /// gradient, then the bias-corrected Adam update follows.
    pub fn step(&mut self, params: &[Node], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter list changed");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, p) in params.iter().enumerate() {
            let grad = p.grad_clone();
            p.update_value(|value| {
                let m = self.m[i].data_mut();
                let v = self.v[i].data_mut();
                for (((x, &g), mi), vi) in value
                    .data_mut()
                    .iter_mut()
                    .zip(grad.data())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *x -= lr * self.weight_decay * *x;
                    *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                    *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                    let m_hat = *mi / bc1;
                    let v_hat = *vi / bc2;
                    *x -= lr * m_hat / (v_hat.sqrt() + self.eps);
                }
            });
        }
    }
}

/// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / total)) / 2.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, lr_min: f64) -> Result<f64> {
    if total_steps == 0 || step > total_steps {
        return Err(Error::InvalidStep {
            step,
            total: total_steps,
        });
    }
    let frac = step as f64 / total_steps as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * frac).cos()))
}
