//! Finite-difference gradient verification.
//!
//! Builds the graph twice per probed element with the input nudged by ±h and
//! compares the central difference against the analytic gradient. Used by the
//! unit tests of every differentiable operation and by the acceptance suite's
//! full-model check.

use crate::autodiff::Node;
use crate::error::Result;
use crate::tensor::Tensor;

pub struct GradCheck {
    /// Central-difference step.
    pub step: f64,
    /// Relative tolerance: |analytic - numeric| / (|analytic| + eps_abs).
    pub rel_tol: f64,
    /// Denominator guard.
    pub eps_abs: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            step: 1e-5,
            rel_tol: 1e-4,
            eps_abs: 1e-8,
        }
    }
}

impl GradCheck {
    /// Verify d(f)/d(inputs) for a scalar-valued graph builder. `f` receives
    /// leaf nodes constructed from `inputs` and returns the scalar root.
    /// Returns the worst relative error seen.
    pub fn check(
        &self,
        inputs: &[Tensor],
        f: impl Fn(&[Node]) -> Result<Node>,
    ) -> Result<f64> {
        let leaves: Vec<Node> = inputs.iter().map(|t| Node::leaf(t.clone())).collect();
        let root = f(&leaves)?;
        root.backward()?;
        let analytic: Vec<Tensor> = leaves.iter().map(|l| l.grad_clone()).collect();

        let mut worst: f64 = 0.0;
        for (which, input) in inputs.iter().enumerate() {
            for idx in 0..input.len() {
                let numeric = {
                    let eval = |delta: f64| -> Result<f64> {
                        let mut nudged: Vec<Tensor> = inputs.to_vec();
                        nudged[which].data_mut()[idx] += delta;
                        let leaves: Vec<Node> =
                            nudged.iter().map(|t| Node::leaf(t.clone())).collect();
                        Ok(f(&leaves)?.item())
                    };
                    (eval(self.step)? - eval(-self.step)?) / (2.0 * self.step)
                };
                let a = analytic[which].data()[idx];
                let err = (a - numeric).abs() / (a.abs() + self.eps_abs);
                worst = worst.max(err);
                if err >= self.rel_tol {
                    return Err(crate::error::Error::DomainError(format!(
                        "gradient check failed: input {} element {}: analytic {} vs numeric {} (rel err {:.3e})",
                        which, idx, a, numeric, err
                    )));
                }
            }
        }
        Ok(worst)
    }
}

/// Absolute+relative comparison used by the full-model parameter check, where
/// finite-difference noise sets a floor under tiny gradients.
pub fn grads_close(analytic: f64, numeric: f64, rel_tol: f64, abs_tol: f64) -> bool {
    (analytic - numeric).abs() <= abs_tol + rel_tol * analytic.abs().max(numeric.abs())
}
