//! Multi-seed experiment execution: drives the trainer, writes metrics,
//! evaluation results, scale-factor snapshots, traces, and checkpoints, and
//! records everything in a manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::env::{self, trace, EnvName, Observation, OBS_LEN};
use crate::error::TrainError;
use crate::ppo::ActorCritic;

use super::records::{Clock, EvalSummary, WallClock, EVAL_HEADER, METRICS_HEADER, SNAPSHOT_HEADER};
use super::{stream_seed, Trainer};

/// Artifact paths of one seed's run, relative to the output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub seed: u64,
    pub metrics: String,
    pub eval: String,
    /// Present only for the adaptive-scale method.
    pub snapshots: Option<String>,
    /// Present when tracing was enabled.
    pub trace: Option<String>,
    pub checkpoints: Vec<String>,
}

/// Index of everything an experiment produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub method: String,
    pub env: String,
    pub seeds: Vec<u64>,
    /// The fully resolved configuration, reproducing the run when fed back.
    pub config_toml: String,
    pub runs: Vec<RunArtifacts>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, TrainError> {
        let json = std::fs::read_to_string(path)?;
        serde_json::from_str(&json).map_err(|e| TrainError::Serde(e.to_string()))
    }
}

/// Run every seed of the experiment with real wall-clock timestamps.
pub fn run_experiment(cfg: &RunConfig) -> Result<Manifest, TrainError> {
    run_experiment_with(cfg, &mut |_seed| Box::new(WallClock::new()))
}

/// Run every seed, constructing the metrics clock per seed; tests inject a
/// deterministic clock here to get byte-identical artifacts.
pub fn run_experiment_with(
    cfg: &RunConfig,
    make_clock: &mut dyn FnMut(u64) -> Box<dyn Clock>,
) -> Result<Manifest, TrainError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;

    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut clock = make_clock(seed);
        runs.push(run_seed(cfg, seed, clock.as_mut())?);
    }

    let (name, size) = cfg.env_selection().expect("validated above");
    let manifest = Manifest {
        config_hash: cfg.hash(),
        method: cfg.method.as_str().to_string(),
        env: format!("{}-{size}x{size}", name.as_str()),
        seeds: cfg.seeds.clone(),
        config_toml: cfg.to_toml_string(),
        runs,
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| TrainError::Serde(e.to_string()))?;
    std::fs::write(out.join("manifest.json"), json)?;
    std::fs::write(out.join("resolved_config.toml"), cfg.to_toml_string())?;
    Ok(manifest)
}

fn run_seed(cfg: &RunConfig, seed: u64, clock: &mut dyn Clock) -> Result<RunArtifacts, TrainError> {
    let out = &cfg.out_dir;
    let mut trainer = Trainer::new(cfg, seed)?;

    let metrics_name = format!("metrics_seed{seed}.csv");
    let mut metrics = BufWriter::new(File::create(out.join(&metrics_name))?);
    writeln!(metrics, "{METRICS_HEADER}")?;

    let eval_name = format!("eval_seed{seed}.csv");
    let mut eval_file = BufWriter::new(File::create(out.join(&eval_name))?);
    writeln!(eval_file, "{EVAL_HEADER}")?;

    let snapshots_enabled =
        cfg.method == crate::config::Method::Acwi && cfg.artifacts.snapshot_every > 0;
    let snapshot_name = format!("snapshots_seed{seed}.csv");
    let mut snapshots = if snapshots_enabled {
        let mut w = BufWriter::new(File::create(out.join(&snapshot_name))?);
        writeln!(w, "{SNAPSHOT_HEADER}")?;
        Some(w)
    } else {
        None
    };

    let tracing = cfg.artifacts.trace_steps > 0;
    let trace_name = format!("trace_seed{seed}.jsonl");
    let mut trace_file = if tracing {
        Some(BufWriter::new(File::create(out.join(&trace_name))?))
    } else {
        None
    };

    let mut checkpoints = Vec::new();
    let iterations = cfg.iterations();
    for iter in 1..=iterations {
        let (record, artifacts) = trainer.run_iteration(clock)?;
        writeln!(metrics, "{}", record.to_csv_row())?;

        if let Some(w) = trace_file.as_mut() {
            for rec in &artifacts.traces {
                trace::write_record(w, rec)?;
            }
        }

        if let Some(w) = snapshots.as_mut() {
            if iter % cfg.artifacts.snapshot_every == 0 || iter == iterations {
                write_snapshot(w, iter, &artifacts.obs_codes, &artifacts.betas, cfg)?;
            }
        }

        let eval_due = cfg.eval.every > 0 && iter % cfg.eval.every == 0;
        if eval_due || iter == iterations {
            let summary = evaluate_policy(
                &trainer.ac,
                trainer.env_name(),
                trainer.env_size(),
                cfg.env.max_steps,
                cfg.eval.episodes,
                stream_seed(seed, "eval"),
            )?;
            writeln!(
                eval_file,
                "{},{},{},{},{}",
                iter, record.env_steps, summary.mean_return, summary.success_rate,
                summary.mean_length
            )?;
            let ckpt_name = format!("ckpt_seed{seed}_iter{iter}");
            trainer.save_checkpoint(&out.join(&ckpt_name))?;
            checkpoints.push(ckpt_name);
        }
    }
    metrics.flush()?;
    eval_file.flush()?;
    if let Some(mut w) = snapshots.take() {
        w.flush()?;
    }
    if let Some(mut w) = trace_file.take() {
        w.flush()?;
    }

    Ok(RunArtifacts {
        seed,
        metrics: metrics_name,
        eval: eval_name,
        snapshots: snapshots_enabled.then_some(snapshot_name),
        trace: tracing.then_some(trace_name),
        checkpoints,
    })
}

/// Append one snapshot block: up to `snapshot_samples` most recent rows of
/// the iteration's batch, each with a short observation digest, its scale
/// factor, and the raw observation bytes.
fn write_snapshot(
    w: &mut impl Write,
    iteration: u64,
    obs_codes: &[Vec<u8>],
    betas: &[f64],
    cfg: &RunConfig,
) -> Result<(), TrainError> {
    let take = obs_codes.len().min(cfg.artifacts.snapshot_samples);
    let start = obs_codes.len() - take;
    for i in start..obs_codes.len() {
        let codes = &obs_codes[i];
        let digest = Sha256::digest(codes);
        let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        let hex: String = codes.iter().map(|b| format!("{b:02x}")).collect();
        writeln!(w, "{iteration},{hash},{},{hex}", betas[i])?;
    }
    Ok(())
}

/// Greedy evaluation: the argmax action in every state, over `episodes`
/// consecutive layouts of a dedicated evaluation seed. Success means the
/// episode terminated (reached its goal) rather than hitting the step limit.
pub fn evaluate_policy(
    ac: &ActorCritic,
    name: EnvName,
    size: usize,
    max_steps_override: Option<u32>,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary, TrainError> {
    let greedy = |obs: &Observation, ac: &ActorCritic| -> Result<env::Action, TrainError> {
        let mut row = Array2::zeros((1, OBS_LEN));
        row.row_mut(0).assign(&ndarray::Array1::from(obs.flatten()));
        let logits = ac.logits(&row)?;
        let mut best = 0;
        for a in 1..logits.ncols() {
            if logits[(0, a)] > logits[(0, best)] {
                best = a;
            }
        }
        Ok(env::Action::from_index(best).expect("argmax over valid actions"))
    };
    run_eval_episodes(name, size, max_steps_override, episodes, seed, |obs| {
        greedy(obs, ac)
    })
}

/// Episode loop shared by the greedy evaluator and scripted-policy tests.
pub(crate) fn run_eval_episodes(
    name: EnvName,
    size: usize,
    max_steps_override: Option<u32>,
    episodes: usize,
    seed: u64,
    mut act: impl FnMut(&Observation) -> Result<env::Action, TrainError>,
) -> Result<EvalSummary, TrainError> {
    assert!(episodes > 0, "need at least one evaluation episode");
    let mut env = env::make_env(name, size, seed)?;
    let mut total_return = 0.0;
    let mut successes = 0usize;
    let mut total_len = 0u64;
    for ep in 0..episodes {
        if ep > 0 {
            env.reset(ep as u64);
        }
        if let Some(limit) = max_steps_override {
            env.max_steps = limit;
        }
        loop {
            let action = act(&env.observe())?;
            let result = env.step(action)?;
            total_return += result.reward;
            if result.done() {
                if result.terminated {
                    successes += 1;
                }
                total_len += u64::from(env.step_count);
                break;
            }
        }
    }
    Ok(EvalSummary {
        mean_return: total_return / episodes as f64,
        success_rate: successes as f64 / episodes as f64,
        mean_length: total_len as f64 / episodes as f64,
    })
}

/// Decode the `obs_hex` column of a snapshot row back into observation
/// codes.
pub fn decode_obs_hex(hex: &str) -> Result<Vec<u8>, TrainError> {
    if hex.len() != 2 * OBS_LEN {
        return Err(TrainError::Serde(format!(
            "observation hex has {} chars, expected {}",
            hex.len(),
            2 * OBS_LEN
        )));
    }
    (0..OBS_LEN)
        .map(|i| {
            u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|e| TrainError::Serde(format!("bad observation hex: {e}")))
        })
        .collect()
}
