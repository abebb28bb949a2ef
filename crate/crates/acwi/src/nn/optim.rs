//! Adam optimizer with global-norm gradient clipping and decoupled weight
//! decay.
//!
//! One [`OptimState`] owns the moment buffers for one [`ParamSet`]; step
//! counts and moments are part of checkpointable run state.

use indexmap::IndexMap;
use ndarray::Array2;

use super::ParamSet;
use crate::error::NnError;

/// What clipping did on one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipReport {
    /// Global L2 norm of the gradients before any scaling.
    pub pre_clip_norm: f64,
    /// Whether the gradients were rescaled.
    pub clipped: bool,
}

/// Adam state: hyperparameters plus first/second moment buffers keyed by
/// parameter name.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay: `p -= lr * weight_decay * p` alongside the
    /// Adam step (zero disables it).
    pub weight_decay: f64,
    pub step_count: u64,
    pub(crate) first_moment: IndexMap<String, Array2<f64>>,
    pub(crate) second_moment: IndexMap<String, Array2<f64>>,
}

impl OptimState {
    /// Standard Adam defaults: betas (0.9, 0.999), eps 1e-8.
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step_count: 0,
            first_moment: IndexMap::new(),
            second_moment: IndexMap::new(),
        }
    }

    /// Scale all gradients so their global L2 norm is at most `max_norm`.
    ///
    /// Returns the pre-clip norm. A non-finite gradient is an error: it would
    /// poison the moments silently otherwise.
    pub fn clip_gradients(params: &mut ParamSet, max_norm: f64) -> Result<ClipReport, NnError> {
        for (name, entry) in params.iter() {
            if entry.grads.iter().any(|g| !g.is_finite()) {
                return Err(NnError::NonFiniteGradient(name.to_string()));
            }
        }
        let norm = params.grad_norm();
        let clipped = max_norm > 0.0 && norm > max_norm;
        if clipped {
            let scale = max_norm / norm;
            for (_, entry) in params.iter_mut() {
                entry.grads *= scale;
            }
        }
        Ok(ClipReport {
            pre_clip_norm: norm,
            clipped,
        })
    }

    /// One Adam step over every parameter in `params`, consuming (and then
    /// zeroing) the accumulated gradients.
    ///
    /// Order of operations: clip to `max_grad_norm` (if `Some`), advance the
    /// shared step count, update moments, apply bias-corrected updates and
    /// decoupled weight decay. Moment buffers appear lazily the first time a
    /// parameter is stepped.
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        max_grad_norm: Option<f64>,
    ) -> Result<ClipReport, NnError> {
        let report = match max_grad_norm {
            Some(max) => Self::clip_gradients(params, max)?,
            None => {
                for (name, entry) in params.iter() {
                    if entry.grads.iter().any(|g| !g.is_finite()) {
                        return Err(NnError::NonFiniteGradient(name.to_string()));
                    }
                }
                ClipReport {
                    pre_clip_norm: params.grad_norm(),
                    clipped: false,
                }
            }
        };

        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);

        for (name, entry) in params.iter_mut() {
            let m = self
                .first_moment
                .entry(name.to_string())
                .or_insert_with(|| Array2::zeros(entry.values.dim()));
            let v = self
                .second_moment
                .entry(name.to_string())
                .or_insert_with(|| Array2::zeros(entry.values.dim()));
            ndarray::Zip::from(&mut entry.values)
                .and(&entry.grads)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= self.learning_rate * (m_hat / (v_hat.sqrt() + self.eps))
                        + self.learning_rate * self.weight_decay * *p;
                });
            if entry.values.iter().any(|p| !p.is_finite()) {
                return Err(NnError::NonFiniteParameter(name.to_string()));
            }
        }
        params.zero_grads();
        Ok(report)
    }
}
