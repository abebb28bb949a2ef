//! Run configuration: typed sections with embedded defaults, TOML loading,
//! `key=value` override application, validation, and a content hash that
//! changes whenever any effective setting changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{self, EnvName};
use crate::error::ConfigError;

/// Which training method a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Extrinsic rewards only.
    Ppo,
    /// Curiosity with a constant scale factor (`beta.fixed`).
    IcmFixed,
    /// Curiosity with the learned state-dependent scale factor.
    Acwi,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ppo => "ppo",
            Method::IcmFixed => "icm_fixed",
            Method::Acwi => "acwi",
        }
    }
}

/// What the critic regresses toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueTarget {
    /// Advantage + value computed from augmented rewards (consistent with
    /// the advantages the policy update uses).
    Gae,
    /// Discounted extrinsic-only Monte-Carlo returns.
    ExtrinsicReturn,
}

/// How intrinsic batch statistics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicNormalization {
    /// One mean/std over the whole rollout batch.
    Rollout,
    /// Fixed-size chunks, each standardized independently.
    Chunked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Environment id; a `-WxH` suffix selects the size, e.g. `empty-8x8`.
    pub name: String,
    /// Explicit size parameter; exclusive with a size suffix in `name`.
    pub size: Option<usize>,
    /// Step-limit override; the per-family formula applies when absent.
    pub max_steps: Option<u32>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            name: "empty-8x8".into(),
            size: None,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    /// Environments stepped in lockstep during collection.
    pub num_envs: usize,
    /// Steps collected per environment per iteration.
    pub steps_per_env: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            num_envs: 8,
            steps_per_env: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Greedy evaluation episodes per checkpoint.
    pub episodes: usize,
    /// Evaluate (and checkpoint) every this many iterations; 0 disables
    /// periodic evaluation, leaving only the final one.
    pub every: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 20,
            every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactConfig {
    /// Scale-factor snapshot cadence in iterations (0 disables).
    pub snapshot_every: u64,
    /// Max observations sampled per snapshot.
    pub snapshot_samples: usize,
    /// Record agent-position traces for the first N environment steps.
    pub trace_steps: u64,
}

impl Default for ArtifactConfig {
    fn default() -> Self {
        ArtifactConfig {
            snapshot_every: 10,
            snapshot_samples: 2048,
            trace_steps: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoSection {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub clip_eps: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Hidden widths of both the actor and the critic.
    pub hidden: Vec<usize>,
    pub value_target: ValueTarget,
    pub max_grad_norm: f64,
}

impl Default for PpoSection {
    fn default() -> Self {
        PpoSection {
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatch_size: 64,
            clip_eps: 0.2,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            hidden: vec![64, 64],
            value_target: ValueTarget::Gae,
            max_grad_norm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcmSection {
    /// Global intrinsic strength multiplying the scaled novelty.
    pub alpha: f64,
    pub lr: f64,
    /// Self-supervised epochs per iteration.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub forward_weight: f64,
    pub inverse_weight: f64,
    pub normalization: IntrinsicNormalization,
    /// Chunk length when `normalization = "chunked"`.
    pub chunk_size: usize,
    /// Stop the forward-model loss gradient at the successor embedding
    /// (ablation switch; the joint objective keeps it off).
    pub detach_next_feature: bool,
    pub max_grad_norm: f64,
    pub weight_decay: f64,
}

impl Default for IcmSection {
    fn default() -> Self {
        IcmSection {
            alpha: 0.001,
            lr: 1e-3,
            epochs: 4,
            minibatch_size: 64,
            feature_dim: 256,
            hidden_dim: 256,
            forward_weight: 0.2,
            inverse_weight: 0.8,
            normalization: IntrinsicNormalization::Rollout,
            chunk_size: 2048,
            detach_next_feature: false,
            max_grad_norm: 1.0,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSection {
    /// Constant scale factor for `method = "icm_fixed"`.
    pub fixed: f64,
    pub lr: f64,
    /// Encoder width; also the embedding and head width.
    pub encoding_dim: usize,
    /// `[min, max]` output bounds.
    pub bounds: [f64; 2],
    pub lambda_reg: f64,
    /// Reference value the regularizer anchors to.
    pub reference: f64,
    /// Variance floor inside the standardizations.
    pub eps: f64,
    pub max_grad_norm: f64,
    pub weight_decay: f64,
}

impl Default for BetaSection {
    fn default() -> Self {
        BetaSection {
            fixed: 1.0,
            lr: 5e-4,
            encoding_dim: 256,
            bounds: [0.1, 2.0],
            lambda_reg: 1e-3,
            reference: 1.0,
            eps: 1e-8,
            max_grad_norm: 1.0,
            weight_decay: 1e-6,
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Environment-step budget; iterations consume
    /// `num_envs * steps_per_env` each and never exceed the budget.
    pub total_steps: u64,
    pub out_dir: PathBuf,
    pub env: EnvConfig,
    pub rollout: RolloutConfig,
    pub eval: EvalConfig,
    pub artifacts: ArtifactConfig,
    pub ppo: PpoSection,
    pub icm: IcmSection,
    pub beta: BetaSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Acwi,
            seeds: vec![0, 1, 2, 3, 4],
            total_steps: 300_000,
            out_dir: PathBuf::from("runs/out"),
            env: EnvConfig::default(),
            rollout: RolloutConfig::default(),
            eval: EvalConfig::default(),
            artifacts: ArtifactConfig::default(),
            ppo: PpoSection::default(),
            icm: IcmSection::default(),
            beta: BetaSection::default(),
        }
    }
}

impl RunConfig {
    /// Parse a TOML document; unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    /// Read a config file.
    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Apply `key=value` overrides with dotted paths (`ppo.gamma=0.98`).
    ///
    /// `seed=N` is shorthand for `seeds=[N]`. Values parse as TOML; the key
    /// must already exist in the resolved config and the value must
    /// deserialize into its slot, so typos in either are rejected.
    pub fn apply_overrides(self, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut table = toml::Table::try_from(&self)
            .map_err(|e| ConfigError::Parse(format!("cannot re-encode config: {e}")))?;
        for spec in overrides {
            let (key, raw_value) = spec.split_once('=').ok_or_else(|| {
                ConfigError::BadOverride(spec.clone(), "expected key=value".into())
            })?;
            let key = key.trim();
            let raw_value = raw_value.trim();
            let (path, value_text): (Vec<&str>, String) = if key == "seed" {
                (vec!["seeds"], format!("[{raw_value}]"))
            } else {
                (key.split('.').collect(), raw_value.to_string())
            };
            let value = parse_toml_value(&value_text)
                .ok_or_else(|| ConfigError::BadOverride(spec.clone(), "unparseable value".into()))?;
            set_path(&mut table, &path, value)
                .map_err(|reason| ConfigError::BadOverride(spec.clone(), reason))?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// Resolve the environment selection to `(family, size)`.
    pub fn env_selection(&self) -> Result<(EnvName, usize), ConfigError> {
        let (name, parsed_size) = env::parse_env_id(&self.env.name)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let has_suffix = self.env.name.contains('-');
        match (has_suffix, self.env.size) {
            (true, Some(_)) => Err(ConfigError::Invalid(format!(
                "env '{}' already carries a size; drop env.size",
                self.env.name
            ))),
            (false, Some(s)) => Ok((name, s)),
            _ => Ok((name, parsed_size)),
        }
    }

    /// Check every semantic constraint; returns the resolved env selection.
    pub fn validate(&self) -> Result<(EnvName, usize), ConfigError> {
        let (name, size) = self.env_selection()?;
        env::layouts::validate_size(name, size).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must be non-empty".into()));
        }
        if self.rollout.num_envs == 0 || self.rollout.steps_per_env == 0 {
            return Err(ConfigError::Invalid(
                "rollout.num_envs and rollout.steps_per_env must be positive".into(),
            ));
        }
        let batch = self.rollout.num_envs as u64 * self.rollout.steps_per_env as u64;
        if self.total_steps < batch {
            return Err(ConfigError::Invalid(format!(
                "total_steps {} below one rollout of {batch} steps",
                self.total_steps
            )));
        }

        let p = &self.ppo;
        if !(0.0..1.0).contains(&p.gamma) {
            return Err(ConfigError::Invalid(format!("ppo.gamma {} not in [0,1)", p.gamma)));
        }
        if !(0.0..=1.0).contains(&p.gae_lambda) {
            return Err(ConfigError::Invalid(format!(
                "ppo.gae_lambda {} not in [0,1]",
                p.gae_lambda
            )));
        }
        for (label, v) in [
            ("ppo.clip_eps", p.clip_eps),
            ("ppo.actor_lr", p.actor_lr),
            ("ppo.critic_lr", p.critic_lr),
            ("ppo.value_coef", p.value_coef),
            ("ppo.max_grad_norm", p.max_grad_norm),
            ("icm.lr", self.icm.lr),
            ("icm.forward_weight", self.icm.forward_weight),
            ("icm.inverse_weight", self.icm.inverse_weight),
            ("icm.max_grad_norm", self.icm.max_grad_norm),
            ("beta.lr", self.beta.lr),
            ("beta.lambda_reg", self.beta.lambda_reg),
            ("beta.eps", self.beta.eps),
            ("beta.max_grad_norm", self.beta.max_grad_norm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::Invalid(format!("{label} must be positive, got {v}")));
            }
        }
        if p.entropy_coef < 0.0 || self.icm.alpha < 0.0 {
            return Err(ConfigError::Invalid(
                "ppo.entropy_coef and icm.alpha must be nonnegative".into(),
            ));
        }
        if p.epochs == 0 && self.method != Method::Ppo {
            // Zero PPO epochs is a legal (if useless) ablation; allow it.
        }
        if p.minibatch_size == 0 || self.icm.minibatch_size == 0 {
            return Err(ConfigError::Invalid("minibatch sizes must be positive".into()));
        }
        if p.hidden.is_empty() || p.hidden.contains(&0) {
            return Err(ConfigError::Invalid(
                "ppo.hidden needs at least one positive width".into(),
            ));
        }
        if self.icm.feature_dim == 0 || self.icm.hidden_dim == 0 {
            return Err(ConfigError::Invalid("icm dims must be positive".into()));
        }
        if self.icm.normalization == IntrinsicNormalization::Chunked && self.icm.chunk_size < 2 {
            return Err(ConfigError::Invalid("icm.chunk_size must be at least 2".into()));
        }

        let b = &self.beta;
        let [lo, hi] = b.bounds;
        if !(lo > 0.0 && lo <= b.reference && b.reference <= hi) {
            return Err(ConfigError::Invalid(format!(
                "beta bounds must satisfy 0 < {lo} <= reference {} <= {hi}",
                b.reference
            )));
        }
        if b.encoding_dim == 0 {
            return Err(ConfigError::Invalid("beta.encoding_dim must be positive".into()));
        }
        if self.method == Method::IcmFixed && !(b.fixed > 0.0 && b.fixed.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "icm_fixed requires a positive beta.fixed, got {}",
                b.fixed
            )));
        }
        if self.eval.episodes == 0 {
            return Err(ConfigError::Invalid("eval.episodes must be positive".into()));
        }
        Ok((name, size))
    }

    /// Iterations this budget affords (never exceeding `total_steps`).
    pub fn iterations(&self) -> u64 {
        let batch = self.rollout.num_envs as u64 * self.rollout.steps_per_env as u64;
        (self.total_steps / batch).max(1)
    }

    /// Canonical TOML rendering of the resolved config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical rendering; any effective change to any
    /// setting changes this value.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml_string().as_bytes());
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_toml_value(text: &str) -> Option<toml::Value> {
    let doc = format!("v = {text}");
    if let Ok(table) = doc.parse::<toml::Table>() {
        return table.get("v").cloned();
    }
    // Bare words become strings so `method=acwi` works unquoted.
    let quoted = format!("v = \"{}\"", text.replace('"', "\\\""));
    quoted
        .parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("v").cloned())
}

/// Walk `path` into the table and replace the existing leaf value.
fn set_path(table: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    match path {
        [] => Err("empty key".into()),
        [leaf] => match table.get_mut(*leaf) {
            Some(slot) => {
                let compatible = match (&*slot, &value) {
                    (toml::Value::Float(_), toml::Value::Integer(_)) => true,
                    (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b),
                };
                if !compatible {
                    return Err(format!(
                        "type mismatch: key holds {} but value is {}",
                        slot.type_str(),
                        value.type_str()
                    ));
                }
                // Integers widen into float slots so `ppo.gamma=1` parses.
                *slot = match (&*slot, value) {
                    (toml::Value::Float(_), toml::Value::Integer(i)) => {
                        toml::Value::Float(i as f64)
                    }
                    (_, v) => v,
                };
                Ok(())
            }
            None if leaf.is_empty() => Err("empty key".into()),
            None => Err(format!("unknown key '{leaf}'")),
        },
        [head, rest @ ..] => match table.get_mut(*head) {
            Some(toml::Value::Table(inner)) => set_path(inner, rest, value),
            Some(_) => Err(format!("'{head}' is not a section")),
            None => Err(format!("unknown section '{head}'")),
        },
    }
}

/// Reference config with every key at its default, suitable for editing.
/// Values not fixed by the method description are marked as artifact
/// defaults.
pub fn reference_toml() -> String {
    let defaults = RunConfig::default();
    format!(
        r#"# Reference configuration. Every key is shown at its default value.
# Lines marked "artifact default" are choices of this implementation.

method = "{method}"            # ppo | icm_fixed | acwi
seeds = [0, 1, 2, 3, 4]
total_steps = {total_steps}          # artifact default
out_dir = "{out_dir}"

[env]
name = "{env_name}"            # artifact default; see `list-envs`

[rollout]
num_envs = {num_envs}                  # artifact default
steps_per_env = {steps_per_env}           # artifact default

[eval]
episodes = {eval_episodes}                  # artifact default
every = {eval_every}                     # iterations; artifact default

[artifacts]
snapshot_every = {snapshot_every}            # iterations; artifact default
snapshot_samples = {snapshot_samples}       # artifact default
trace_steps = {trace_steps}           # artifact default

[ppo]
gamma = {gamma}
gae_lambda = {gae_lambda}
epochs = {ppo_epochs}
minibatch_size = {ppo_minibatch}           # artifact default
clip_eps = {clip_eps}
actor_lr = {actor_lr}
critic_lr = {critic_lr}
value_coef = {value_coef}               # artifact default
entropy_coef = {entropy_coef}           # artifact default
hidden = [64, 64]             # artifact default
value_target = "gae"          # gae | extrinsic_return; artifact default
max_grad_norm = {ppo_clip_norm}           # artifact default

[icm]
alpha = {alpha}
lr = {icm_lr}
epochs = {icm_epochs}                    # artifact default (mirrors ppo.epochs)
minibatch_size = {icm_minibatch}
feature_dim = {feature_dim}             # artifact default
hidden_dim = {hidden_dim}              # artifact default
forward_weight = {forward_weight}          # artifact default
inverse_weight = {inverse_weight}          # artifact default
normalization = "rollout"     # rollout | chunked; artifact default
chunk_size = {chunk_size}             # artifact default
detach_next_feature = false   # artifact default (ablation switch)
max_grad_norm = {icm_clip_norm}           # artifact default
weight_decay = {icm_wd}            # artifact default

[beta]
fixed = {fixed}                   # used by icm_fixed; sweep set {{0.1, 0.2, 0.5, 1, 2}}
lr = {beta_lr}
encoding_dim = {encoding_dim}
bounds = [0.1, 2.0]
lambda_reg = {lambda_reg}
reference = {reference}
eps = {eps}                    # artifact default
max_grad_norm = {beta_clip_norm}
weight_decay = {beta_wd}
"#,
        method = defaults.method.as_str(),
        total_steps = defaults.total_steps,
        out_dir = defaults.out_dir.display(),
        env_name = defaults.env.name,
        num_envs = defaults.rollout.num_envs,
        steps_per_env = defaults.rollout.steps_per_env,
        eval_episodes = defaults.eval.episodes,
        eval_every = defaults.eval.every,
        snapshot_every = defaults.artifacts.snapshot_every,
        snapshot_samples = defaults.artifacts.snapshot_samples,
        trace_steps = defaults.artifacts.trace_steps,
        gamma = defaults.ppo.gamma,
        gae_lambda = defaults.ppo.gae_lambda,
        ppo_epochs = defaults.ppo.epochs,
        ppo_minibatch = defaults.ppo.minibatch_size,
        clip_eps = defaults.ppo.clip_eps,
        actor_lr = defaults.ppo.actor_lr,
        critic_lr = defaults.ppo.critic_lr,
        value_coef = defaults.ppo.value_coef,
        entropy_coef = defaults.ppo.entropy_coef,
        ppo_clip_norm = defaults.ppo.max_grad_norm,
        alpha = defaults.icm.alpha,
        icm_lr = defaults.icm.lr,
        icm_epochs = defaults.icm.epochs,
        icm_minibatch = defaults.icm.minibatch_size,
        feature_dim = defaults.icm.feature_dim,
        hidden_dim = defaults.icm.hidden_dim,
        forward_weight = defaults.icm.forward_weight,
        inverse_weight = defaults.icm.inverse_weight,
        chunk_size = defaults.icm.chunk_size,
        icm_clip_norm = defaults.icm.max_grad_norm,
        icm_wd = defaults.icm.weight_decay,
        fixed = defaults.beta.fixed,
        beta_lr = defaults.beta.lr,
        encoding_dim = defaults.beta.encoding_dim,
        lambda_reg = defaults.beta.lambda_reg,
        reference = defaults.beta.reference,
        eps = defaults.beta.eps,
        beta_clip_norm = defaults.beta.max_grad_norm,
        beta_wd = defaults.beta.weight_decay,
    )
}

/// The constant-scale values compared against the adaptive method.
pub const FIXED_BETA_SWEEP: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_the_documented_values() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.ppo.gamma, 0.99);
        assert_eq!(cfg.ppo.gae_lambda, 0.95);
        assert_eq!(cfg.ppo.epochs, 4);
        assert_eq!(cfg.ppo.clip_eps, 0.2);
        assert_eq!(cfg.ppo.actor_lr, 3e-4);
        assert_eq!(cfg.ppo.critic_lr, 3e-4);
        assert_eq!(cfg.icm.lr, 1e-3);
        assert_eq!(cfg.icm.minibatch_size, 64);
        assert_eq!(cfg.icm.alpha, 0.001);
        assert_eq!(cfg.beta.lr, 5e-4);
        assert_eq!(cfg.beta.encoding_dim, 256);
        assert_eq!(cfg.beta.bounds, [0.1, 2.0]);
        assert_eq!(cfg.beta.lambda_reg, 1e-3);
        assert_eq!(cfg.beta.reference, 1.0);
        assert_eq!(cfg.beta.max_grad_norm, 1.0);
        assert_eq!(cfg.beta.weight_decay, 1e-6);
    }

    #[test]
    fn reference_toml_round_trips_to_the_defaults() {
        let cfg = RunConfig::from_toml_str(&reference_toml()).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("velocity = 3").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        let err = RunConfig::from_toml_str("[ppo]\nlr = 1.0").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn overrides_set_nested_keys_and_reject_unknown_ones() {
        let cfg = RunConfig::default()
            .apply_overrides(&[
                "ppo.gamma=0.98".into(),
                "method=ppo".into(),
                "beta.bounds=[0.2, 3.0]".into(),
                "env.name=doorkey-6x6".into(),
                "total_steps=8192".into(),
            ])
            .unwrap();
        assert_eq!(cfg.ppo.gamma, 0.98);
        assert_eq!(cfg.method, Method::Ppo);
        assert_eq!(cfg.beta.bounds, [0.2, 3.0]);
        assert_eq!(cfg.env.name, "doorkey-6x6");

        let err = RunConfig::default()
            .apply_overrides(&["ppo.momentum=0.9".into()])
            .unwrap_err();
        assert!(matches!(err, ConfigError::BadOverride(_, _)), "{err}");
        let err = RunConfig::default()
            .apply_overrides(&["gravity=9.8".into()])
            .unwrap_err();
        assert!(matches!(err, ConfigError::BadOverride(_, _)), "{err}");
        let err = RunConfig::default()
            .apply_overrides(&["ppo.gamma=fast".into()])
            .unwrap_err();
        assert!(matches!(err, ConfigError::BadOverride(_, _)), "{err}");
    }

    #[test]
    fn seed_is_shorthand_for_a_single_seed_list() {
        let cfg = RunConfig::default()
            .apply_overrides(&["seed=7".into()])
            .unwrap();
        assert_eq!(cfg.seeds, vec![7]);
    }

    #[test]
    fn integer_overrides_widen_into_float_slots() {
        let cfg = RunConfig::default()
            .apply_overrides(&["beta.fixed=2".into()])
            .unwrap();
        assert_eq!(cfg.beta.fixed, 2.0);
    }

    #[test]
    fn env_selection_handles_suffixes_and_explicit_sizes() {
        let mut cfg = RunConfig::default();
        cfg.env.name = "doorkey-16x16".into();
        assert_eq!(cfg.env_selection().unwrap(), (EnvName::DoorKey, 16));

        cfg.env.name = "doorkey".into();
        cfg.env.size = Some(6);
        assert_eq!(cfg.env_selection().unwrap(), (EnvName::DoorKey, 6));

        cfg.env.name = "doorkey-8x8".into();
        assert!(cfg.env_selection().is_err(), "size given twice");
    }

    #[test]
    fn validation_rejects_out_of_range_settings() {
        let mut cfg = RunConfig::default();
        cfg.ppo.gamma = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.method = Method::IcmFixed;
        cfg.beta.fixed = -0.5;
        assert!(cfg.validate().is_err());
        cfg.beta.fixed = 0.37; // any positive scalar is allowed
        assert!(cfg.validate().is_ok());

        let mut cfg = RunConfig::default();
        cfg.beta.bounds = [1.5, 1.2];
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.total_steps = 100; // below one rollout
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_changes_with_any_hyperparameter() {
        let base = RunConfig::default();
        let mut changed = base.clone();
        changed.ppo.gamma = 0.995;
        assert_ne!(base.hash(), changed.hash());

        let mut changed = base.clone();
        changed.beta.lambda_reg = 2e-3;
        assert_ne!(base.hash(), changed.hash());

        let mut changed = base.clone();
        changed.seeds = vec![0];
        assert_ne!(base.hash(), changed.hash());

        assert_eq!(base.hash(), RunConfig::default().hash());
        assert_eq!(base.hash().len(), 64);
    }

    #[test]
    fn iterations_never_exceed_the_step_budget() {
        let mut cfg = RunConfig::default();
        cfg.total_steps = 300_000;
        let batch = (cfg.rollout.num_envs * cfg.rollout.steps_per_env) as u64;
        assert!(cfg.iterations() * batch <= cfg.total_steps);
        cfg.total_steps = batch; // exactly one iteration
        assert_eq!(cfg.iterations(), 1);
    }
}
