//! Intrinsic curiosity module: a feature encoder with forward and inverse
//! dynamics heads, trained jointly on collected transitions.
//!
//! The forward head predicts the next feature vector from the current
//! features and the action; its squared prediction error is the raw novelty
//! signal `I_t = ½‖f_fwd(φ_t, a_t) − φ_{t+1}‖²`. The inverse head predicts
//! the action from consecutive features, which keeps the feature space
//! focused on controllable aspects of the environment. Raw novelty is
//! batch-standardized and rectified (`max(0, ·)`) so only above-average
//! surprise earns a bonus.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::NUM_ACTIONS;
use crate::error::NnError;
use crate::nn::{
    mlp_forward, BoundParams, MlpSpec, OptimState, OutputActivation, ParamSet, Tape, TensorId,
};

/// Relative weights of the two self-supervised terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcmLossWeights {
    pub alpha_forward: f64,
    pub alpha_inverse: f64,
}

impl Default for IcmLossWeights {
    /// Inverse-weighted defaults following the original curiosity setup.
    fn default() -> Self {
        IcmLossWeights {
            alpha_forward: 0.2,
            alpha_inverse: 0.8,
        }
    }
}

impl IcmLossWeights {
    fn validate(self) {
        assert!(
            self.alpha_forward >= 0.0 && self.alpha_inverse >= 0.0,
            "loss weights must be nonnegative"
        );
        assert!(
            self.alpha_forward > 0.0 || self.alpha_inverse > 0.0,
            "at least one loss weight must be positive"
        );
    }
}

/// Raw and rectified novelty for one batch, with the statistics used.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicBatch {
    pub raw: Vec<f64>,
    pub rectified: Vec<f64>,
    pub batch_mean: f64,
    pub batch_std: f64,
}

impl IntrinsicBatch {
    /// Fraction of entries rectified to exactly zero.
    pub fn fraction_zero(&self) -> f64 {
        if self.rectified.is_empty() {
            return 0.0;
        }
        self.rectified.iter().filter(|&&v| v == 0.0).count() as f64 / self.rectified.len() as f64
    }
}

/// Standardize then rectify one batch of raw novelty values:
/// `out[i] = max(0, (raw[i] - mean) / (std + eps))` with population std.
pub fn rectify_normalize(raw: &[f64], eps: f64) -> IntrinsicBatch {
    assert!(!raw.is_empty(), "rectify_normalize needs a nonempty batch");
    assert!(eps > 0.0, "eps must be positive");
    let batch_mean = crate::nn::stats::mean(raw);
    let batch_std = crate::nn::stats::population_std(raw);
    let rectified = raw
        .iter()
        .map(|&v| ((v - batch_mean) / (batch_std + eps)).max(0.0))
        .collect();
    IntrinsicBatch {
        raw: raw.to_vec(),
        rectified,
        batch_mean,
        batch_std,
    }
}

/// Like [`rectify_normalize`] but with statistics computed per consecutive
/// chunk of `chunk_size` entries (the trailing chunk may be shorter). This is
/// the minibatch-scoped reading of the normalization; the whole-rollout scope
/// is the default elsewhere.
pub fn rectify_normalize_chunked(raw: &[f64], eps: f64, chunk_size: usize) -> IntrinsicBatch {
    assert!(chunk_size > 0, "chunk_size must be positive");
    let mut rectified = Vec::with_capacity(raw.len());
    for chunk in raw.chunks(chunk_size) {
        rectified.extend(rectify_normalize(chunk, eps).rectified);
    }
    // Whole-batch statistics are still reported for the metrics stream.
    IntrinsicBatch {
        raw: raw.to_vec(),
        rectified,
        batch_mean: crate::nn::stats::mean(raw),
        batch_std: crate::nn::stats::population_std(raw),
    }
}

/// One-hot encode discrete actions as a `[batch, n]` matrix.
fn one_hot(actions: &[usize], n: usize) -> Result<Array2<f64>, NnError> {
    let mut out = Array2::zeros((actions.len(), n));
    for (i, &a) in actions.iter().enumerate() {
        if a >= n {
            return Err(NnError::LabelOutOfRange {
                label: a,
                classes: n,
            });
        }
        out[(i, a)] = 1.0;
    }
    Ok(out)
}

/// Encoder plus forward/inverse dynamics heads over one parameter set.
#[derive(Debug, Clone)]
pub struct IcmNets {
    encoder: MlpSpec,
    forward_head: MlpSpec,
    inverse_head: MlpSpec,
    /// Entries prefixed `enc.`, `fwd.`, `inv.`.
    pub params: ParamSet,
    /// When set, next-state features enter the forward loss as constants, so
    /// the encoder learns only through the current-state and inverse paths.
    pub detach_next_feature: bool,
}

impl IcmNets {
    /// Build and initialize all three networks.
    ///
    /// The encoder maps observations (147) through one tanh layer of
    /// `hidden_dim` to `feature_dim` linear features; both heads use one tanh
    /// layer of `hidden_dim`.
    pub fn new(
        feature_dim: usize,
        hidden_dim: usize,
        detach_next_feature: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let encoder = MlpSpec::new(
            crate::env::OBS_LEN,
            vec![hidden_dim],
            feature_dim,
            OutputActivation::Identity,
        );
        let forward_head = MlpSpec::new(
            feature_dim + NUM_ACTIONS,
            vec![hidden_dim],
            feature_dim,
            OutputActivation::Identity,
        );
        let inverse_head = MlpSpec::new(
            2 * feature_dim,
            vec![hidden_dim],
            NUM_ACTIONS,
            OutputActivation::Identity,
        );
        let mut params = ParamSet::new();
        encoder.init_into(&mut params, "enc", 1.0, rng);
        forward_head.init_into(&mut params, "fwd", 1.0, rng);
        inverse_head.init_into(&mut params, "inv", 1.0, rng);
        IcmNets {
            encoder,
            forward_head,
            inverse_head,
            params,
            detach_next_feature,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.output_dim
    }

    /// Plain (non-recorded) feature encoding of an observation batch.
    pub fn encode(&self, obs: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        mlp_forward(&self.encoder, &self.params, "enc", obs)
    }

    fn check_batch(
        &self,
        obs: &Array2<f64>,
        actions: &[usize],
        next_obs: &Array2<f64>,
    ) -> Result<(), NnError> {
        if obs.nrows() == 0 {
            return Err(NnError::DimensionMismatch("empty transition batch".into()));
        }
        if obs.nrows() != actions.len() || obs.nrows() != next_obs.nrows() {
            return Err(NnError::DimensionMismatch(format!(
                "batch sizes disagree: {} obs, {} actions, {} next_obs",
                obs.nrows(),
                actions.len(),
                next_obs.nrows()
            )));
        }
        Ok(())
    }

    /// Record the joint loss on `tape` against `bound` parameters:
    /// `alpha_forward * E[½‖pred − φ'‖²] + alpha_inverse * E[-log p(a)]`.
    pub fn loss_graph(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        obs: &Array2<f64>,
        actions: &[usize],
        next_obs: &Array2<f64>,
        weights: IcmLossWeights,
    ) -> Result<TensorId, NnError> {
        weights.validate();
        self.check_batch(obs, actions, next_obs)?;
        let onehot = one_hot(actions, NUM_ACTIONS)?;

        let obs_id = tape.leaf(obs.clone());
        let phi = tape.mlp_forward_graph(&self.encoder, bound, "enc", obs_id)?;
        let phi_next = if self.detach_next_feature {
            tape.leaf(self.encode(next_obs)?)
        } else {
            let next_id = tape.leaf(next_obs.clone());
            tape.mlp_forward_graph(&self.encoder, bound, "enc", next_id)?
        };

        let onehot_id = tape.leaf(onehot);
        let fwd_in = tape.concat_cols(phi, onehot_id);
        let pred = tape.mlp_forward_graph(&self.forward_head, bound, "fwd", fwd_in)?;
        let diff = tape.sub(pred, phi_next);
        let sq = tape.square(diff);
        let per_row = tape.row_sum(sq);
        let half = tape.mul_scalar(per_row, 0.5);
        let forward_loss = tape.mean(half);

        let inv_in = tape.concat_cols(phi, phi_next);
        let logits = tape.mlp_forward_graph(&self.inverse_head, bound, "inv", inv_in)?;
        let log_probs = tape.log_softmax(logits);
        let picked = tape.gather_cols(log_probs, actions);
        let negated = tape.neg(picked);
        let inverse_loss = tape.mean(negated);

        let wf = tape.mul_scalar(forward_loss, weights.alpha_forward);
        let wi = tape.mul_scalar(inverse_loss, weights.alpha_inverse);
        Ok(tape.add(wf, wi))
    }

    /// Evaluate the joint loss without updating anything.
    pub fn loss(
        &self,
        obs: &Array2<f64>,
        actions: &[usize],
        next_obs: &Array2<f64>,
        weights: IcmLossWeights,
    ) -> Result<f64, NnError> {
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let id = self.loss_graph(&mut tape, &bound, obs, actions, next_obs, weights)?;
        Ok(tape.scalar_value(id))
    }

    /// Raw novelty `I_t = ½‖f_fwd(φ_t, a_t) − φ_{t+1}‖²` per transition.
    /// Computed without recording: the reward signal is a detached quantity.
    pub fn raw_intrinsic(
        &self,
        obs: &Array2<f64>,
        actions: &[usize],
        next_obs: &Array2<f64>,
    ) -> Result<Vec<f64>, NnError> {
        self.check_batch(obs, actions, next_obs)?;
        let phi = self.encode(obs)?;
        let phi_next = self.encode(next_obs)?;
        let onehot = one_hot(actions, NUM_ACTIONS)?;
        let mut fwd_in = Array2::zeros((phi.nrows(), phi.ncols() + NUM_ACTIONS));
        fwd_in.slice_mut(ndarray::s![.., ..phi.ncols()]).assign(&phi);
        fwd_in.slice_mut(ndarray::s![.., phi.ncols()..]).assign(&onehot);
        let pred = mlp_forward(&self.forward_head, &self.params, "fwd", &fwd_in)?;
        let err = &pred - &phi_next;
        Ok(err
            .rows()
            .into_iter()
            .map(|r| 0.5 * r.iter().map(|e| e * e).sum::<f64>())
            .collect())
    }

    /// Train on the batch: `epochs` passes of shuffled minibatch Adam steps.
    /// Returns the per-epoch mean loss (weighted by minibatch size).
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        opt: &mut OptimState,
        obs: &Array2<f64>,
        actions: &[usize],
        next_obs: &Array2<f64>,
        weights: IcmLossWeights,
        epochs: usize,
        minibatch_size: usize,
        max_grad_norm: f64,
        rng: &mut impl Rng,
    ) -> Result<Vec<f64>, NnError> {
        self.check_batch(obs, actions, next_obs)?;
        assert!(minibatch_size > 0, "minibatch_size must be positive");
        let n = obs.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(minibatch_size) {
                let mb_obs = obs.select(Axis(0), chunk);
                let mb_next = next_obs.select(Axis(0), chunk);
                let mb_actions: Vec<usize> = chunk.iter().map(|&i| actions[i]).collect();

                let mut tape = Tape::new();
                let bound = tape.bind(&self.params);
                let loss =
                    self.loss_graph(&mut tape, &bound, &mb_obs, &mb_actions, &mb_next, weights)?;
                tape.backward(loss)?;
                self.params.zero_grads();
                tape.harvest_into(&bound, &mut self.params)?;
                opt.step(&mut self.params, Some(max_grad_norm))?;
                loss_sum += tape.scalar_value(loss) * chunk.len() as f64;
            }
            trace.push(loss_sum / n as f64);
        }
        Ok(trace)
    }
}
