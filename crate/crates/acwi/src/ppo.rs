//! Policy optimization: actor-critic networks, reward augmentation,
//! generalized advantage estimation, and the clipped-surrogate update.
//!
//! The actor and critic are separate tanh multilayer perceptrons with their
//! own optimizers. Rewards reaching the learner are the augmented values
//! `r = extrinsic + alpha * beta(s) * intrinsic`, with the scale and novelty
//! terms entering as constants; no policy gradient flows back into the
//! curiosity or scaling networks.

use ndarray::Array2;
use rand::Rng;

use crate::error::NnError;
use crate::nn::{
    self, mlp_forward, MlpSpec, OptimState, OutputActivation, ParamSet, Tape,
};

/// Hyperparameters of the clipped-surrogate update.
#[derive(Debug, Clone)]
pub struct PpoParams {
    /// Clip range for the probability ratio.
    pub clip_eps: f64,
    /// Weight of the squared-error value term.
    pub value_coef: f64,
    /// Weight of the entropy bonus.
    pub entropy_coef: f64,
    /// Passes over the batch per update.
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Global gradient-norm ceiling applied per network.
    pub max_grad_norm: f64,
}

impl Default for PpoParams {
    fn default() -> Self {
        PpoParams {
            clip_eps: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs: 4,
            minibatch_size: 64,
            max_grad_norm: 1.0,
        }
    }
}

/// Separate policy and value networks over flattened observations.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor_spec: MlpSpec,
    pub critic_spec: MlpSpec,
    /// Entries prefixed `pi.`.
    pub actor: ParamSet,
    /// Entries prefixed `vf.`.
    pub critic: ParamSet,
}

impl ActorCritic {
    /// Build both networks with the given hidden widths (tanh throughout);
    /// the actor emits one logit per action, the critic a scalar value.
    pub fn new(hidden: &[usize], rng: &mut impl Rng) -> Self {
        let actor_spec = MlpSpec::new(
            crate::env::OBS_LEN,
            hidden.to_vec(),
            crate::env::NUM_ACTIONS,
            OutputActivation::Identity,
        );
        let critic_spec = MlpSpec::new(
            crate::env::OBS_LEN,
            hidden.to_vec(),
            1,
            OutputActivation::Identity,
        );
        let mut actor = ParamSet::new();
        actor_spec.init_into(&mut actor, "pi", 1.0, rng);
        let mut critic = ParamSet::new();
        critic_spec.init_into(&mut critic, "vf", 1.0, rng);
        ActorCritic {
            actor_spec,
            critic_spec,
            actor,
            critic,
        }
    }

    /// Raw action logits, `[batch, num_actions]`.
    pub fn logits(&self, obs: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        mlp_forward(&self.actor_spec, &self.actor, "pi", obs)
    }

    /// Action probabilities, each row a valid categorical distribution.
    pub fn action_probs(&self, obs: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        Ok(nn::stats::softmax_rows(&self.logits(obs)?))
    }

    /// State-value estimates, one per row.
    pub fn values(&self, obs: &Array2<f64>) -> Result<Vec<f64>, NnError> {
        let v = mlp_forward(&self.critic_spec, &self.critic, "vf", obs)?;
        Ok(v.column(0).to_vec())
    }

    /// Sample one action per row; returns `(action, log_prob)` pairs.
    pub fn sample_actions(
        &self,
        obs: &Array2<f64>,
        rng: &mut impl Rng,
    ) -> Result<Vec<(usize, f64)>, NnError> {
        let logits = self.logits(obs)?;
        let probs = nn::stats::softmax_rows(&logits);
        let mut out = Vec::with_capacity(obs.nrows());
        for r in 0..obs.nrows() {
            let u: f64 = rng.random();
            let row = probs.row(r);
            let action = sample_index(row.as_slice().expect("contiguous row"), u);
            out.push((action, row[action].ln()));
        }
        Ok(out)
    }

    /// Log-probabilities of given actions and per-row entropies, without
    /// recording gradients.
    pub fn log_probs_entropy(
        &self,
        obs: &Array2<f64>,
        actions: &[usize],
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        let probs = self.action_probs(obs)?;
        let mut log_probs = Vec::with_capacity(actions.len());
        let mut entropies = Vec::with_capacity(actions.len());
        for (r, &a) in actions.iter().enumerate() {
            if a >= probs.ncols() {
                return Err(NnError::LabelOutOfRange {
                    label: a,
                    classes: probs.ncols(),
                });
            }
            log_probs.push(probs[(r, a)].ln());
            entropies.push(
                -probs
                    .row(r)
                    .iter()
                    .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
                    .sum::<f64>(),
            );
        }
        Ok((log_probs, entropies))
    }
}

/// Pick an index from a probability row using a single uniform draw.
fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One step of experience destined for the learner. `next_value` is the
/// critic's estimate of the successor state, used for bootstrapping.
#[derive(Debug, Clone, Default)]
pub struct RolloutBatch {
    /// Flattened observations, one row per step, contiguous per environment.
    pub obs: Array2<f64>,
    /// Successor observations aligned with `obs`; at episode ends this is
    /// the final observation, never the reset one.
    pub next_obs: Array2<f64>,
    pub actions: Vec<usize>,
    pub log_probs_old: Vec<f64>,
    pub rewards_ext: Vec<f64>,
    pub values: Vec<f64>,
    pub next_values: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    /// Rectified normalized novelty, filled after the curiosity update.
    pub intrinsic: Vec<f64>,
    /// State-dependent scale factors, filled before reward augmentation.
    pub betas: Vec<f64>,
    /// Augmented rewards `extrinsic + alpha * beta * intrinsic`.
    pub rewards_aug: Vec<f64>,
    /// Discounted extrinsic-only returns with zero tails.
    pub ext_returns: Vec<f64>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Elementwise `reward + alpha * beta * intrinsic`.
///
/// The scale and novelty vectors are plain numbers here by design: the
/// policy update must not differentiate through them.
pub fn augment_rewards(
    rewards_ext: &[f64],
    betas: &[f64],
    intrinsic: &[f64],
    alpha: f64,
) -> Result<Vec<f64>, NnError> {
    if rewards_ext.len() != betas.len() || rewards_ext.len() != intrinsic.len() {
        return Err(NnError::DimensionMismatch(format!(
            "reward augmentation lengths disagree: {} rewards, {} betas, {} intrinsic",
            rewards_ext.len(),
            betas.len(),
            intrinsic.len()
        )));
    }
    Ok(rewards_ext
        .iter()
        .zip(betas.iter().zip(intrinsic.iter()))
        .map(|(&r, (&b, &i))| r + alpha * (b * i))
        .collect())
}

/// Generalized advantage estimation over one contiguous trajectory slice.
///
/// `next_values[t]` is the critic's estimate of the state after step `t`;
/// it is ignored where `terminated[t]` (the successor value is zero) and
/// serves as the bootstrap where `truncated[t]` or at the slice end. The
/// geometric accumulation is cut at every episode boundary so advantages
/// never leak across episodes. Targets are `advantage + value`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    terminated: &[bool],
    truncated: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(
        values.len() == n && next_values.len() == n && terminated.len() == n && truncated.len() == n,
        "advantage estimation arrays must align"
    );
    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let next_v = if terminated[t] { 0.0 } else { next_values[t] };
        let delta = rewards[t] + gamma * next_v - values[t];
        if terminated[t] || truncated[t] {
            carry = 0.0;
        }
        carry = delta + gamma * lambda * carry;
        advantages[t] = carry;
    }
    let targets = advantages
        .iter()
        .zip(values.iter())
        .map(|(a, v)| a + v)
        .collect();
    (advantages, targets)
}

/// Discounted extrinsic-only returns `G_t = R_t + gamma * G_{t+1}` with the
/// recursion reset to a zero tail at every episode boundary and at the end
/// of the slice. No bootstrap: this is the plain Monte-Carlo signal the
/// scale network correlates novelty against.
pub fn extrinsic_returns(
    rewards_ext: &[f64],
    terminated: &[bool],
    truncated: &[bool],
    gamma: f64,
) -> Vec<f64> {
    let n = rewards_ext.len();
    assert!(
        terminated.len() == n && truncated.len() == n,
        "return computation arrays must align"
    );
    let mut returns = vec![0.0; n];
    let mut tail = 0.0;
    for t in (0..n).rev() {
        if terminated[t] || truncated[t] {
            tail = 0.0;
        }
        tail = rewards_ext[t] + gamma * tail;
        returns[t] = tail;
    }
    returns
}

/// Normalize advantages in place to zero mean and unit variance over the
/// whole batch; returns the pre-normalization `(mean, std)`.
pub fn normalize_advantages(advantages: &mut [f64]) -> (f64, f64) {
    let mean = nn::stats::mean(advantages);
    let std = nn::stats::population_std(advantages);
    let normalized = nn::stats::zscore(advantages, 1e-8);
    advantages.copy_from_slice(&normalized);
    (mean, std)
}

/// Loss values of one minibatch evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PpoLosses {
    /// Negated clipped surrogate (lower is better for the policy).
    pub policy_loss: f64,
    /// Mean squared error of the critic against the targets.
    pub value_loss: f64,
    /// Mean categorical entropy of the policy.
    pub entropy: f64,
    /// Fraction of samples whose ratio left the clip interval.
    pub clip_frac: f64,
}

/// Aggregated result of one full update.
#[derive(Debug, Clone)]
pub struct PpoReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    /// Combined loss of every minibatch in update order.
    pub loss_trace: Vec<f64>,
}

struct MinibatchView<'a> {
    obs: Array2<f64>,
    actions: Vec<usize>,
    log_probs_old: Vec<f64>,
    advantages: Vec<f64>,
    targets: Vec<f64>,
    _marker: std::marker::PhantomData<&'a ()>,
}

fn gather_minibatch<'a>(batch: &'a RolloutBatch, idx: &[usize]) -> MinibatchView<'a> {
    MinibatchView {
        obs: batch.obs.select(ndarray::Axis(0), idx),
        actions: idx.iter().map(|&i| batch.actions[i]).collect(),
        log_probs_old: idx.iter().map(|&i| batch.log_probs_old[i]).collect(),
        advantages: idx.iter().map(|&i| batch.advantages[i]).collect(),
        targets: idx.iter().map(|&i| batch.targets[i]).collect(),
        _marker: std::marker::PhantomData,
    }
}

/// Evaluate the clipped-surrogate losses on one minibatch, optionally
/// recording gradients into `ac`'s parameter sets.
fn ppo_losses_inner(
    ac: &mut ActorCritic,
    mb: &MinibatchView<'_>,
    params: &PpoParams,
    record: bool,
) -> Result<PpoLosses, NnError> {
    let mut tape = Tape::new();
    let actor_bound = tape.bind(&ac.actor);
    let critic_bound = tape.bind(&ac.critic);
    let obs_id = tape.leaf(mb.obs.clone());

    // Policy head: ratio against the behavior policy, clipped surrogate.
    let logits = tape.mlp_forward_graph(&ac.actor_spec, &actor_bound, "pi", obs_id)?;
    let log_probs = tape.log_softmax(logits);
    let picked = tape.gather_cols(log_probs, &mb.actions);
    let old = tape.leaf_col(&mb.log_probs_old);
    let log_ratio = tape.sub(picked, old);
    let ratio = tape.exp(log_ratio);
    let adv = tape.leaf_col(&mb.advantages);
    let unclipped = tape.mul(ratio, adv);
    let ratio_clipped = tape.clamp(ratio, 1.0 - params.clip_eps, 1.0 + params.clip_eps);
    let clipped = tape.mul(ratio_clipped, adv);
    let surrogate = tape.minimum(unclipped, clipped);
    let mean_surrogate = tape.mean(surrogate);
    let policy_loss = tape.neg(mean_surrogate);

    // Entropy bonus on the same logits.
    let probs = tape.softmax(logits);
    let plogp = tape.mul(probs, log_probs);
    let neg_ent_rows = tape.row_sum(plogp);
    let neg_entropy = tape.mean(neg_ent_rows);
    let entropy = tape.neg(neg_entropy);

    // Value head: squared error against the prepared targets.
    let value = tape.mlp_forward_graph(&ac.critic_spec, &critic_bound, "vf", obs_id)?;
    let target = tape.leaf_col(&mb.targets);
    let verr = tape.sub(value, target);
    let verr_sq = tape.square(verr);
    let value_loss = tape.mean(verr_sq);

    let weighted_value = tape.mul_scalar(value_loss, params.value_coef);
    let weighted_entropy = tape.mul_scalar(entropy, params.entropy_coef);
    let with_value = tape.add(policy_loss, weighted_value);
    let total = tape.sub(with_value, weighted_entropy);

    let losses = PpoLosses {
        policy_loss: tape.scalar_value(policy_loss),
        value_loss: tape.scalar_value(value_loss),
        entropy: tape.scalar_value(entropy),
        clip_frac: {
            let r = tape.value(ratio);
            let outside = r
                .iter()
                .filter(|&&x| (x - 1.0).abs() > params.clip_eps)
                .count();
            outside as f64 / r.len() as f64
        },
    };
    if !losses.policy_loss.is_finite() || !losses.value_loss.is_finite() {
        return Err(NnError::NonFiniteLoss(losses.policy_loss));
    }

    if record {
        tape.backward(total)?;
        ac.actor.zero_grads();
        ac.critic.zero_grads();
        tape.harvest_into(&actor_bound, &mut ac.actor)?;
        tape.harvest_into(&critic_bound, &mut ac.critic)?;
    }
    Ok(losses)
}

/// Evaluate the losses on an explicit minibatch and leave the combined
/// loss's gradients in `ac`'s parameter sets without taking an optimizer
/// step. Useful for gradient diagnostics; parameter values are untouched.
#[allow(clippy::too_many_arguments)]
pub fn ppo_loss_grads(
    ac: &mut ActorCritic,
    obs: &Array2<f64>,
    actions: &[usize],
    log_probs_old: &[f64],
    advantages: &[f64],
    targets: &[f64],
    params: &PpoParams,
) -> Result<PpoLosses, NnError> {
    let mb = MinibatchView {
        obs: obs.clone(),
        actions: actions.to_vec(),
        log_probs_old: log_probs_old.to_vec(),
        advantages: advantages.to_vec(),
        targets: targets.to_vec(),
        _marker: std::marker::PhantomData,
    };
    ppo_losses_inner(ac, &mb, params, true)
}

/// Evaluate the losses on an explicit minibatch without touching parameters.
pub fn ppo_losses(
    ac: &ActorCritic,
    obs: &Array2<f64>,
    actions: &[usize],
    log_probs_old: &[f64],
    advantages: &[f64],
    targets: &[f64],
    params: &PpoParams,
) -> Result<PpoLosses, NnError> {
    let mb = MinibatchView {
        obs: obs.clone(),
        actions: actions.to_vec(),
        log_probs_old: log_probs_old.to_vec(),
        advantages: advantages.to_vec(),
        targets: targets.to_vec(),
        _marker: std::marker::PhantomData,
    };
    let mut scratch = ac.clone();
    ppo_losses_inner(&mut scratch, &mb, params, false)
}

/// Run `params.epochs` passes of shuffled minibatch updates over the batch.
///
/// Advantages must already be normalized. The actor and critic step with
/// their own optimizers; gradient norms are clipped per network.
pub fn ppo_update(
    ac: &mut ActorCritic,
    batch: &RolloutBatch,
    params: &PpoParams,
    actor_opt: &mut OptimState,
    critic_opt: &mut OptimState,
    rng: &mut impl Rng,
) -> Result<PpoReport, NnError> {
    let n = batch.len();
    if batch.obs.nrows() != n
        || batch.log_probs_old.len() != n
        || batch.advantages.len() != n
        || batch.targets.len() != n
    {
        return Err(NnError::DimensionMismatch(
            "rollout batch fields are not aligned".into(),
        ));
    }

    let mut report = PpoReport {
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        clip_frac: 0.0,
        loss_trace: Vec::new(),
    };
    let mut total_rows = 0usize;
    let mut indices: Vec<usize> = (0..n).collect();
    for _ in 0..params.epochs {
        shuffle(&mut indices, rng);
        for chunk in indices.chunks(params.minibatch_size.max(1)) {
            let mb = gather_minibatch(batch, chunk);
            let losses = ppo_losses_inner(ac, &mb, params, true)?;
            actor_opt.step(&mut ac.actor, Some(params.max_grad_norm))?;
            critic_opt.step(&mut ac.critic, Some(params.max_grad_norm))?;

            let w = chunk.len();
            report.policy_loss += losses.policy_loss * w as f64;
            report.value_loss += losses.value_loss * w as f64;
            report.entropy += losses.entropy * w as f64;
            report.clip_frac += losses.clip_frac * w as f64;
            report.loss_trace.push(
                losses.policy_loss + params.value_coef * losses.value_loss
                    - params.entropy_coef * losses.entropy,
            );
            total_rows += w;
        }
    }
    if total_rows > 0 {
        let scale = 1.0 / total_rows as f64;
        report.policy_loss *= scale;
        report.value_loss *= scale;
        report.entropy *= scale;
        report.clip_frac *= scale;
    }
    Ok(report)
}

/// Fisher–Yates shuffle driven by the caller's generator.
fn shuffle(indices: &mut [usize], rng: &mut impl Rng) {
    for i in (1..indices.len()).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
}
