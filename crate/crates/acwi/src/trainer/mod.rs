//! Training orchestration: rollout collection, the per-iteration stage
//! sequence (curiosity update → novelty → extrinsic returns → scale update →
//! reward augmentation → advantage estimation → policy update), baseline
//! modes, checkpointing, and multi-seed experiment execution.

mod experiment;
mod records;

pub use experiment::{
    decode_obs_hex, evaluate_policy, run_experiment, run_experiment_with, Manifest, RunArtifacts,
};
pub use records::{
    Clock, EvalSummary, IterationRecord, TickClock, WallClock, EVAL_HEADER, METRICS_HEADER,
    SNAPSHOT_HEADER,
};

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beta::BetaNet;
use crate::config::{IntrinsicNormalization, Method, RunConfig, ValueTarget};
use crate::env::{self, layouts, trace::TraceRecord, Action, EnvName, GridState, OBS_LEN};
use crate::error::TrainError;
use crate::icm::{self, IcmLossWeights, IcmNets};
use crate::nn::{OptimState, ParamSet};
use crate::ppo::{self, ActorCritic, PpoParams, RolloutBatch};

/// The stages of one training iteration, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Collect,
    IcmUpdate,
    IntrinsicCompute,
    ExtrinsicReturns,
    BetaUpdate,
    AugmentRewards,
    Gae,
    PpoUpdate,
}

/// Parameter checksums taken right after a stage finished; lets tests prove
/// each stage touched only its own network.
#[derive(Debug, Clone, Copy)]
pub struct StageChecksums {
    pub stage: Stage,
    pub actor: u64,
    pub critic: u64,
    pub icm: u64,
    pub beta: u64,
}

/// Derive an independent seed for a named random stream. Every network and
/// the rollout sampler get their own stream, so adding or removing one
/// component never shifts the randomness of another.
pub fn stream_seed(seed: u64, tag: &str) -> u64 {
    let digest = Sha256::digest(tag.as_bytes());
    let tag64 = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    layouts::splitmix64(seed ^ tag64)
}

fn checksum_params(params: &ParamSet) -> u64 {
    let mut h = Sha256::new();
    for (name, entry) in params.iter() {
        h.update(name.as_bytes());
        for v in entry.values.iter() {
            h.update(v.to_le_bytes());
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Everything produced by one collection pass besides the batch itself.
struct Collected {
    batch: RolloutBatch,
    /// Raw observation codes per row, for scale-factor snapshots.
    obs_codes: Vec<Vec<u8>>,
    /// `(return, length)` of episodes that finished during this pass.
    episodes: Vec<(f64, u32)>,
    traces: Vec<TraceRecord>,
}

/// Extra per-iteration outputs that feed artifact writers and let tests
/// inspect the exact reward composition.
pub struct IterationArtifacts {
    /// Raw observation codes, one per batch row.
    pub obs_codes: Vec<Vec<u8>>,
    /// Scale factors aligned with `obs_codes` (empty for plain policy runs).
    pub betas: Vec<f64>,
    /// Agent-position trace records captured this iteration.
    pub traces: Vec<TraceRecord>,
    /// Environment rewards, one per batch row.
    pub rewards_ext: Vec<f64>,
    /// Rewards the learner consumed.
    pub rewards_aug: Vec<f64>,
    /// Rectified normalized novelty (zeros for plain policy runs).
    pub intrinsic: Vec<f64>,
}

/// Single-seed training state executing the full iteration sequence.
pub struct Trainer {
    pub cfg: RunConfig,
    pub seed: u64,
    env_name: EnvName,
    env_size: usize,
    envs: Vec<GridState>,
    /// In-flight extrinsic return and length per environment.
    ep_returns: Vec<f64>,
    ep_lens: Vec<u32>,
    pub ac: ActorCritic,
    actor_opt: OptimState,
    critic_opt: OptimState,
    pub icm: Option<IcmNets>,
    icm_opt: Option<OptimState>,
    pub beta: Option<BetaNet>,
    beta_opt: Option<OptimState>,
    /// Single stream driving all training-time randomness in stage order.
    rng: ChaCha8Rng,
    pub iteration: u64,
    pub env_steps: u64,
    /// Stages executed by the most recent iteration.
    events: Vec<Stage>,
    /// Filled only when [`Trainer::record_checksums`] is on.
    stage_checksums: Vec<StageChecksums>,
    pub record_checksums: bool,
}

impl Trainer {
    /// Build a fresh trainer: environments, networks, and optimizers are all
    /// derived deterministically from the config and seed. Methods share the
    /// policy and environment streams, so runs differing only in method see
    /// identical initial conditions.
    pub fn new(cfg: &RunConfig, seed: u64) -> Result<Trainer, TrainError> {
        let (env_name, env_size) = cfg.validate()?;

        let mut envs = Vec::with_capacity(cfg.rollout.num_envs);
        for e in 0..cfg.rollout.num_envs {
            let env_seed = stream_seed(seed, &format!("env/{e}"));
            let mut env = env::make_env(env_name, env_size, env_seed)?;
            if let Some(limit) = cfg.env.max_steps {
                env.max_steps = limit;
            }
            envs.push(env);
        }

        let mut ac_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "actor-critic"));
        let ac = ActorCritic::new(&cfg.ppo.hidden, &mut ac_rng);

        let (icm, icm_opt) = if cfg.method == Method::Ppo {
            (None, None)
        } else {
            let mut icm_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "icm"));
            let nets = IcmNets::new(
                cfg.icm.feature_dim,
                cfg.icm.hidden_dim,
                cfg.icm.detach_next_feature,
                &mut icm_rng,
            );
            (
                Some(nets),
                Some(OptimState::new(cfg.icm.lr, cfg.icm.weight_decay)),
            )
        };

        // The constant-scale baseline never instantiates the scale network.
        let (beta, beta_opt) = if cfg.method == Method::Acwi {
            let mut beta_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "beta"));
            let net = BetaNet::new(
                cfg.beta.encoding_dim,
                (cfg.beta.bounds[0], cfg.beta.bounds[1]),
                cfg.beta.reference,
                &mut beta_rng,
            );
            (
                Some(net),
                Some(OptimState::new(cfg.beta.lr, cfg.beta.weight_decay)),
            )
        } else {
            (None, None)
        };

        Ok(Trainer {
            cfg: cfg.clone(),
            seed,
            env_name,
            env_size,
            envs,
            ep_returns: vec![0.0; cfg.rollout.num_envs],
            ep_lens: vec![0; cfg.rollout.num_envs],
            ac,
            actor_opt: OptimState::new(cfg.ppo.actor_lr, 0.0),
            critic_opt: OptimState::new(cfg.ppo.critic_lr, 0.0),
            icm,
            icm_opt,
            beta,
            beta_opt,
            rng: ChaCha8Rng::seed_from_u64(stream_seed(seed, "train")),
            iteration: 0,
            env_steps: 0,
            events: Vec::new(),
            stage_checksums: Vec::new(),
            record_checksums: false,
        })
    }

    pub fn env_name(&self) -> EnvName {
        self.env_name
    }

    pub fn env_size(&self) -> usize {
        self.env_size
    }

    /// Stages the most recent iteration executed, in order.
    pub fn last_events(&self) -> &[Stage] {
        &self.events
    }

    /// Per-stage parameter checksums of the most recent iteration
    /// (empty unless `record_checksums` was set).
    pub fn last_checksums(&self) -> &[StageChecksums] {
        &self.stage_checksums
    }

    fn mark(&mut self, stage: Stage) {
        self.events.push(stage);
        if self.record_checksums {
            self.stage_checksums.push(StageChecksums {
                stage,
                actor: checksum_params(&self.ac.actor),
                critic: checksum_params(&self.ac.critic),
                icm: self.icm.as_ref().map_or(0, |n| checksum_params(&n.params)),
                beta: self.beta.as_ref().map_or(0, |n| checksum_params(&n.params)),
            });
        }
    }

    /// Roll all environments forward in lockstep for the configured number
    /// of steps. Rows are laid out environment-major: environment `e`
    /// occupies rows `e*T ..= e*T+T-1` in collection order, so every
    /// per-environment slice is contiguous for the return computations.
    fn collect(&mut self) -> Result<Collected, TrainError> {
        let t_len = self.cfg.rollout.steps_per_env;
        let n_envs = self.cfg.rollout.num_envs;
        let n = t_len * n_envs;

        let mut obs = Array2::zeros((n, OBS_LEN));
        let mut next_obs = Array2::zeros((n, OBS_LEN));
        let mut obs_codes: Vec<Vec<u8>> = vec![Vec::new(); n];
        let mut actions = vec![0usize; n];
        let mut log_probs_old = vec![0.0; n];
        let mut rewards_ext = vec![0.0; n];
        let mut terminated = vec![false; n];
        let mut truncated = vec![false; n];
        let mut episodes = Vec::new();
        let mut traces = Vec::new();

        let mut current = Array2::zeros((n_envs, OBS_LEN));
        let mut current_codes: Vec<Vec<u8>> = Vec::with_capacity(n_envs);
        for (e, env) in self.envs.iter().enumerate() {
            let o = env.observe();
            current
                .row_mut(e)
                .assign(&ndarray::Array1::from(o.flatten()));
            current_codes.push(o.codes().to_vec());
        }

        for t in 0..t_len {
            let sampled = self.ac.sample_actions(&current, &mut self.rng)?;
            for e in 0..n_envs {
                let row = e * t_len + t;
                let (action_idx, log_prob) = sampled[e];
                let action = Action::from_index(action_idx).expect("policy emits valid actions");

                obs.row_mut(row).assign(&current.row(e));
                obs_codes[row] = std::mem::take(&mut current_codes[e]);
                actions[row] = action_idx;
                log_probs_old[row] = log_prob;

                let result = self.envs[e].step(action)?;
                next_obs
                    .row_mut(row)
                    .assign(&ndarray::Array1::from(result.obs.flatten()));
                rewards_ext[row] = result.reward;
                terminated[row] = result.terminated;
                truncated[row] = result.truncated;

                self.ep_returns[e] += result.reward;
                self.ep_lens[e] += 1;

                if self.env_steps < self.cfg.artifacts.trace_steps {
                    traces.push(TraceRecord {
                        episode: self.envs[e].episode_index,
                        step: self.envs[e].step_count,
                        agent_pos: self.envs[e].agent_pos,
                        action,
                        reward: result.reward,
                        done: result.done(),
                    });
                }
                self.env_steps += 1;

                if result.done() {
                    episodes.push((self.ep_returns[e], self.ep_lens[e]));
                    self.ep_returns[e] = 0.0;
                    self.ep_lens[e] = 0;
                    let next_episode = self.envs[e].episode_index + 1;
                    self.envs[e].reset(next_episode);
                    if let Some(limit) = self.cfg.env.max_steps {
                        self.envs[e].max_steps = limit;
                    }
                    let o = self.envs[e].observe();
                    current
                        .row_mut(e)
                        .assign(&ndarray::Array1::from(o.flatten()));
                    current_codes[e] = o.codes().to_vec();
                } else {
                    current.row_mut(e).assign(&next_obs.row(row));
                    current_codes[e] = result.obs.codes().to_vec();
                }
            }
        }

        let values = self.ac.values(&obs)?;
        let next_values = self.ac.values(&next_obs)?;

        let batch = RolloutBatch {
            obs,
            next_obs,
            actions,
            log_probs_old,
            rewards_ext,
            values,
            next_values,
            terminated,
            truncated,
            intrinsic: vec![0.0; n],
            betas: Vec::new(),
            rewards_aug: Vec::new(),
            ext_returns: Vec::new(),
            advantages: Vec::new(),
            targets: Vec::new(),
        };
        Ok(Collected {
            batch,
            obs_codes,
            episodes,
            traces,
        })
    }

    /// Execute one full iteration and return its metrics record plus the
    /// artifact payloads (snapshot observations, traces).
    pub fn run_iteration(
        &mut self,
        clock: &mut dyn Clock,
    ) -> Result<(IterationRecord, IterationArtifacts), TrainError> {
        self.events.clear();
        self.stage_checksums.clear();
        self.iteration += 1;
        let t_len = self.cfg.rollout.steps_per_env;
        let n_envs = self.cfg.rollout.num_envs;

        let Collected {
            mut batch,
            obs_codes,
            episodes,
            traces,
        } = self.collect()?;
        self.mark(Stage::Collect);

        // Curiosity: self-supervised update first, then the novelty signal
        // from the freshly updated model.
        let mut l_icm = None;
        let mut intr_mean = None;
        if self.icm.is_some() {
            let epoch_losses = {
                let Trainer {
                    icm, icm_opt, rng, cfg, ..
                } = &mut *self;
                let icm_nets = icm.as_mut().expect("checked above");
                let opt = icm_opt.as_mut().expect("optimizer accompanies the nets");
                icm_nets.update(
                    opt,
                    &batch.obs,
                    &batch.actions,
                    &batch.next_obs,
                    IcmLossWeights {
                        alpha_forward: cfg.icm.forward_weight,
                        alpha_inverse: cfg.icm.inverse_weight,
                    },
                    cfg.icm.epochs,
                    cfg.icm.minibatch_size,
                    cfg.icm.max_grad_norm,
                    rng,
                )?
            };
            l_icm = Some(mean(&epoch_losses));
            self.mark(Stage::IcmUpdate);

            let icm_nets = self.icm.as_ref().expect("checked above");
            let raw = icm_nets.raw_intrinsic(&batch.obs, &batch.actions, &batch.next_obs)?;
            let normalized = match self.cfg.icm.normalization {
                IntrinsicNormalization::Rollout => icm::rectify_normalize(&raw, self.cfg.beta.eps),
                IntrinsicNormalization::Chunked => {
                    icm::rectify_normalize_chunked(&raw, self.cfg.beta.eps, self.cfg.icm.chunk_size)
                }
            };
            batch.intrinsic = normalized.rectified;
            intr_mean = Some(mean(&batch.intrinsic));
            self.mark(Stage::IntrinsicCompute);
        }

        // Discounted extrinsic-only returns per environment slice.
        let mut ext_returns = Vec::with_capacity(batch.len());
        for e in 0..n_envs {
            let range = e * t_len..(e + 1) * t_len;
            ext_returns.extend(ppo::extrinsic_returns(
                &batch.rewards_ext[range.clone()],
                &batch.terminated[range.clone()],
                &batch.truncated[range],
                self.cfg.ppo.gamma,
            ));
        }
        batch.ext_returns = ext_returns;
        self.mark(Stage::ExtrinsicReturns);

        // Scale factors: learned (one update, pre-update values are used
        // downstream), constant, or absent.
        let mut l_corr = None;
        let mut l_reg = None;
        match self.cfg.method {
            Method::Acwi => {
                let report = {
                    let Trainer { beta, beta_opt, cfg, .. } = &mut *self;
                    let net = beta.as_mut().expect("acwi builds the scale network");
                    let opt = beta_opt.as_mut().expect("acwi builds its optimizer");
                    net.update(
                        opt,
                        &batch.obs,
                        &batch.intrinsic,
                        &batch.ext_returns,
                        cfg.beta.eps,
                        cfg.beta.lambda_reg,
                        cfg.beta.max_grad_norm,
                    )?
                };
                l_corr = Some(report.corr_loss);
                l_reg = Some(report.reg_loss);
                batch.betas = report.beta_values;
                self.mark(Stage::BetaUpdate);
            }
            Method::IcmFixed => {
                batch.betas = vec![self.cfg.beta.fixed; batch.len()];
            }
            Method::Ppo => {}
        }

        // Reward augmentation; the plain baseline passes extrinsic rewards
        // through untouched.
        batch.rewards_aug = if self.cfg.method == Method::Ppo {
            batch.rewards_ext.clone()
        } else {
            ppo::augment_rewards(
                &batch.rewards_ext,
                &batch.betas,
                &batch.intrinsic,
                self.cfg.icm.alpha,
            )?
        };
        self.mark(Stage::AugmentRewards);

        // Advantage estimation per environment slice, then batch-wide
        // normalization.
        let mut advantages = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len());
        for e in 0..n_envs {
            let range = e * t_len..(e + 1) * t_len;
            let (adv, tgt) = ppo::compute_gae(
                &batch.rewards_aug[range.clone()],
                &batch.values[range.clone()],
                &batch.next_values[range.clone()],
                &batch.terminated[range.clone()],
                &batch.truncated[range],
                self.cfg.ppo.gamma,
                self.cfg.ppo.gae_lambda,
            );
            advantages.extend(adv);
            targets.extend(tgt);
        }
        batch.advantages = advantages;
        batch.targets = match self.cfg.ppo.value_target {
            ValueTarget::Gae => targets,
            ValueTarget::ExtrinsicReturn => batch.ext_returns.clone(),
        };
        ppo::normalize_advantages(&mut batch.advantages);
        self.mark(Stage::Gae);

        let ppo_params = PpoParams {
            clip_eps: self.cfg.ppo.clip_eps,
            value_coef: self.cfg.ppo.value_coef,
            entropy_coef: self.cfg.ppo.entropy_coef,
            epochs: self.cfg.ppo.epochs,
            minibatch_size: self.cfg.ppo.minibatch_size,
            max_grad_norm: self.cfg.ppo.max_grad_norm,
        };
        let ppo_report = ppo::ppo_update(
            &mut self.ac,
            &batch,
            &ppo_params,
            &mut self.actor_opt,
            &mut self.critic_opt,
            &mut self.rng,
        )?;
        self.mark(Stage::PpoUpdate);

        let (ep_return_mean, ep_return_std, ep_len_mean) = if episodes.is_empty() {
            (None, None, None)
        } else {
            let returns: Vec<f64> = episodes.iter().map(|e| e.0).collect();
            let lens: Vec<f64> = episodes.iter().map(|e| e.1 as f64).collect();
            (
                Some(mean(&returns)),
                Some(crate::nn::stats::population_std(&returns)),
                Some(mean(&lens)),
            )
        };
        let (beta_mean, beta_std) = if batch.betas.is_empty() {
            (None, None)
        } else {
            (
                Some(mean(&batch.betas)),
                Some(crate::nn::stats::population_std(&batch.betas)),
            )
        };

        let record = IterationRecord {
            iteration: self.iteration,
            env_steps: self.env_steps,
            ep_return_mean,
            ep_return_std,
            ep_len_mean,
            l_icm,
            l_corr,
            l_reg,
            beta_mean,
            beta_std,
            intr_mean,
            clip_frac: ppo_report.clip_frac,
            entropy: ppo_report.entropy,
            wallclock_s: clock.now_s(),
        };
        let artifacts = IterationArtifacts {
            obs_codes,
            betas: batch.betas,
            traces,
            rewards_ext: batch.rewards_ext,
            rewards_aug: batch.rewards_aug,
            intrinsic: batch.intrinsic,
        };
        Ok((record, artifacts))
    }

    /// Write everything needed for an exact resume into `dir`.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<(), TrainError> {
        std::fs::create_dir_all(dir)?;
        self.ac.actor.save(&dir.join("actor.params"))?;
        self.ac.critic.save(&dir.join("critic.params"))?;
        self.actor_opt.save(&dir.join("actor.opt"))?;
        self.critic_opt.save(&dir.join("critic.opt"))?;
        if let Some(icm_nets) = &self.icm {
            icm_nets.params.save(&dir.join("icm.params"))?;
            self.icm_opt
                .as_ref()
                .expect("icm optimizer accompanies the nets")
                .save(&dir.join("icm.opt"))?;
        }
        if let Some(beta_net) = &self.beta {
            beta_net.params.save(&dir.join("beta.params"))?;
            self.beta_opt
                .as_ref()
                .expect("beta optimizer accompanies the net")
                .save(&dir.join("beta.opt"))?;
        }
        let state = TrainerStateFile {
            config_hash: self.cfg.hash(),
            seed: self.seed,
            iteration: self.iteration,
            env_steps: self.env_steps,
            rng: self.rng.clone(),
            envs: self.envs.clone(),
            ep_returns: self.ep_returns.clone(),
            ep_lens: self.ep_lens.clone(),
        };
        let json = serde_json::to_string_pretty(&state)
            .map_err(|e| TrainError::Serde(e.to_string()))?;
        std::fs::write(dir.join("state.json"), json)?;
        Ok(())
    }

    /// Rebuild a trainer from a checkpoint written by [`save_checkpoint`].
    /// The config must hash identically to the one the checkpoint was
    /// written under.
    pub fn resume(cfg: &RunConfig, dir: &Path) -> Result<Trainer, TrainError> {
        let json = std::fs::read_to_string(dir.join("state.json"))?;
        let state: TrainerStateFile =
            serde_json::from_str(&json).map_err(|e| TrainError::Serde(e.to_string()))?;
        if state.config_hash != cfg.hash() {
            return Err(TrainError::ResumeMismatch(format!(
                "checkpoint was written under config {} but this run is {}",
                state.config_hash,
                cfg.hash()
            )));
        }

        let mut trainer = Trainer::new(cfg, state.seed)?;
        trainer.ac.actor = load_matching(&dir.join("actor.params"), &trainer.ac.actor)?;
        trainer.ac.critic = load_matching(&dir.join("critic.params"), &trainer.ac.critic)?;
        trainer.actor_opt = OptimState::load(&dir.join("actor.opt"))?;
        trainer.critic_opt = OptimState::load(&dir.join("critic.opt"))?;
        if let Some(icm_nets) = trainer.icm.as_mut() {
            icm_nets.params = load_matching(&dir.join("icm.params"), &icm_nets.params)?;
            trainer.icm_opt = Some(OptimState::load(&dir.join("icm.opt"))?);
        }
        if let Some(beta_net) = trainer.beta.as_mut() {
            beta_net.params = load_matching(&dir.join("beta.params"), &beta_net.params)?;
            trainer.beta_opt = Some(OptimState::load(&dir.join("beta.opt"))?);
        }
        trainer.rng = state.rng;
        trainer.envs = state.envs;
        trainer.ep_returns = state.ep_returns;
        trainer.ep_lens = state.ep_lens;
        trainer.iteration = state.iteration;
        trainer.env_steps = state.env_steps;
        if trainer.envs.len() != cfg.rollout.num_envs {
            return Err(TrainError::ResumeMismatch(format!(
                "checkpoint carries {} environments, config expects {}",
                trainer.envs.len(),
                cfg.rollout.num_envs
            )));
        }
        Ok(trainer)
    }
}

/// Load just the policy networks from a checkpoint directory, e.g. for
/// standalone evaluation. Architecture comes from the config; weights from
/// the checkpoint's parameter files.
pub fn load_policy(cfg: &RunConfig, dir: &Path) -> Result<ActorCritic, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ac = ActorCritic::new(&cfg.ppo.hidden, &mut rng);
    ac.actor = load_matching(&dir.join("actor.params"), &ac.actor)?;
    ac.critic = load_matching(&dir.join("critic.params"), &ac.critic)?;
    Ok(ac)
}

/// Load a parameter file and verify it is shape-compatible with `template`.
fn load_matching(path: &Path, template: &ParamSet) -> Result<ParamSet, TrainError> {
    let loaded = ParamSet::load(path)?;
    for (name, entry) in template.iter() {
        let got = loaded.values(name).map_err(|_| {
            TrainError::ResumeMismatch(format!("{}: missing parameter '{name}'", path.display()))
        })?;
        if got.dim() != entry.values.dim() {
            return Err(TrainError::ResumeMismatch(format!(
                "{}: parameter '{name}' has shape {:?}, expected {:?}",
                path.display(),
                got.dim(),
                entry.values.dim()
            )));
        }
    }
    if loaded.len() != template.len() {
        return Err(TrainError::ResumeMismatch(format!(
            "{}: {} parameters, expected {}",
            path.display(),
            loaded.len(),
            template.len()
        )));
    }
    Ok(loaded)
}

#[derive(Serialize, Deserialize)]
struct TrainerStateFile {
    config_hash: String,
    seed: u64,
    iteration: u64,
    env_steps: u64,
    rng: ChaCha8Rng,
    envs: Vec<GridState>,
    ep_returns: Vec<f64>,
    ep_lens: Vec<u32>,
}

fn mean(xs: &[f64]) -> f64 {
    crate::nn::stats::mean(xs)
}
