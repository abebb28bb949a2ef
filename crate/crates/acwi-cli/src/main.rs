//! Command-line front end: train, evaluate, analyze, and sweep subcommands
//! over declarative TOML configs.
//!
//! Exit codes: 0 on success, 2 for configuration/usage problems, 1 for
//! runtime failures. Every failure prints exactly one
//! `error[<class>]: <message>` line to stderr.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use acwi::analysis::{analyze_experiments, AnalyzeOptions};
use acwi::config::{Method, RunConfig, FIXED_BETA_SWEEP};
use acwi::env::EnvName;
use acwi::error::{AnalysisError, ConfigError, Error, TrainError};
use acwi::trainer::{evaluate_policy, load_policy, run_experiment, stream_seed, Manifest};

/// Environment variable that re-roots relative output directories.
const OUT_ROOT_VAR: &str = "ACWI_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "acwi",
    version,
    about = "Curiosity-driven gridworld training with an adaptive intrinsic-reward scale"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one method over the configured seeds.
    Train(ConfigArgs),
    /// Greedily evaluate the final checkpoint of a finished run.
    Eval(EvalArgs),
    /// Produce analysis CSVs and plots from finished experiment directories.
    Analyze(AnalyzeArgs),
    /// Run the full comparison: five fixed scales, the adaptive method, and
    /// the plain baseline, in subdirectories of the output directory.
    Sweep(ConfigArgs),
    /// List the available environments.
    ListEnvs,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file; omit to use built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the fully resolved config(s) instead of running.
    #[arg(long)]
    print_config: bool,
    /// Config overrides, e.g. `ppo.gamma=0.995` or `seed=7`.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Experiment directory containing `manifest.json`.
    #[arg(long)]
    run: PathBuf,
    /// Seed whose checkpoint to evaluate (default: the first in the run).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of evaluation episodes (default: the config's eval count).
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Experiment directories (each with a `manifest.json`).
    #[arg(long = "run", value_name = "DIR", required = true)]
    runs: Vec<PathBuf>,
    /// Where to write the analysis artifacts (default: `<first run>/analysis`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of training-stage windows for the scale histograms.
    #[arg(long, default_value_t = 4)]
    stages: usize,
    /// Moving-average smoothing window for the curves.
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Column to aggregate into curves (eval columns read the eval CSVs).
    #[arg(long, default_value = "mean_return")]
    column: String,
    /// Project curiosity-encoder features instead of the scale network's.
    #[arg(long)]
    icm_encoder: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (class, code) = classify(&err);
            let msg = err.to_string().replace('\n', " ");
            eprintln!("error[{class}]: {msg}");
            ExitCode::from(code)
        }
    }
}

/// Map an error to its machine-parseable class and exit code. Anything the
/// user can fix by editing the invocation or config exits 2; failures at
/// runtime exit 1.
fn classify(err: &Error) -> (&'static str, u8) {
    match err {
        Error::Config(_) => ("config", 2),
        Error::Train(TrainError::Config(_)) => ("config", 2),
        Error::Analysis(AnalysisError::InvalidInput(_)) => ("config", 2),
        Error::Train(_) => ("train", 1),
        Error::Analysis(_) => ("analysis", 1),
        Error::Env(_) => ("env", 1),
        Error::Nn(_) => ("nn", 1),
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Analyze(args) => analyze(args),
        Command::Sweep(args) => sweep(args),
        Command::ListEnvs => {
            list_envs();
            Ok(())
        }
    }
}

/// Load + override + re-root: the full config resolution pipeline.
fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, Error> {
    let cfg = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = cfg.apply_overrides(&args.overrides)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Ok(root) = std::env::var(OUT_ROOT_VAR) {
        if !root.is_empty() && cfg.out_dir.is_relative() {
            cfg.out_dir = PathBuf::from(root).join(&cfg.out_dir);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(args: ConfigArgs) -> Result<(), Error> {
    let cfg = resolve_config(&args)?;
    if args.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    log::info!(
        "training method={} env={} seeds={:?}",
        cfg.method.as_str(),
        cfg.env.name,
        cfg.seeds
    );
    let manifest = run_experiment(&cfg)?;
    println!(
        "wrote {} ({} seeds, {} iterations each)",
        cfg.out_dir.join("manifest.json").display(),
        manifest.runs.len(),
        cfg.iterations()
    );
    Ok(())
}

/// The method comparison grid: every fixed scale, the adaptive method, and
/// the plain baseline, as label/config pairs under one output root.
fn expand_sweep(base: &RunConfig) -> Vec<(String, RunConfig)> {
    let mut entries = Vec::new();
    for beta in FIXED_BETA_SWEEP {
        let mut cfg = base.clone();
        cfg.method = Method::IcmFixed;
        cfg.beta.fixed = beta;
        entries.push((format!("icm_fixed_{beta}"), cfg));
    }
    let mut acwi_cfg = base.clone();
    acwi_cfg.method = Method::Acwi;
    entries.push(("acwi".to_string(), acwi_cfg));
    let mut ppo_cfg = base.clone();
    ppo_cfg.method = Method::Ppo;
    entries.push(("ppo".to_string(), ppo_cfg));
    for (label, cfg) in entries.iter_mut() {
        cfg.out_dir = base.out_dir.join(label.as_str());
    }
    entries
}

fn sweep(args: ConfigArgs) -> Result<(), Error> {
    let base = resolve_config(&args)?;
    let entries = expand_sweep(&base);
    if args.print_config {
        for (label, cfg) in &entries {
            println!("# --- {label}");
            print!("{}", cfg.to_toml_string());
        }
        return Ok(());
    }
    for (label, cfg) in &entries {
        log::info!("sweep entry {label}");
        cfg.validate()?;
        run_experiment(cfg)?;
        println!("wrote {}", cfg.out_dir.join("manifest.json").display());
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Error> {
    let manifest_path = args.run.join("manifest.json");
    let manifest = Manifest::load(&manifest_path)?;
    let cfg = RunConfig::from_toml_str(&manifest.config_toml)?;
    let seed = match args.seed {
        Some(s) => {
            if !manifest.seeds.contains(&s) {
                return Err(ConfigError::Invalid(format!(
                    "seed {s} is not part of this run (has {:?})",
                    manifest.seeds
                ))
                .into());
            }
            s
        }
        None => *manifest.seeds.first().ok_or_else(|| {
            TrainError::Serde(format!("{}: no seeds recorded", manifest_path.display()))
        })?,
    };
    let artifact = manifest
        .runs
        .iter()
        .find(|r| r.seed == seed)
        .ok_or_else(|| {
            TrainError::Serde(format!(
                "{}: no artifacts for seed {seed}",
                manifest_path.display()
            ))
        })?;
    let ckpt = artifact.checkpoints.last().ok_or_else(|| {
        TrainError::Serde(format!(
            "{}: seed {seed} has no checkpoints",
            manifest_path.display()
        ))
    })?;

    let ac = load_policy(&cfg, &args.run.join(ckpt))?;
    let (name, size) = cfg.env_selection()?;
    let episodes = args.episodes.unwrap_or(cfg.eval.episodes);
    let summary = evaluate_policy(
        &ac,
        name,
        size,
        cfg.env.max_steps,
        episodes,
        stream_seed(seed, "eval"),
    )?;
    println!(
        "seed={seed} checkpoint={ckpt} episodes={episodes} mean_return={} success_rate={} mean_length={}",
        summary.mean_return, summary.success_rate, summary.mean_length
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.runs[0].join("analysis"));
    let options = AnalyzeOptions {
        smoothing_window: args.window.max(1),
        stages: args.stages,
        curve_column: args.column.clone(),
        use_icm_encoder: args.icm_encoder,
        ..AnalyzeOptions::default()
    };
    let written = analyze_experiments(&args.runs, &options, &out)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn list_envs() {
    println!("environment ids (name or name-<size>):");
    for name in EnvName::ALL {
        let default = default_env_id(name);
        let mut variants: BTreeSet<String> = BTreeSet::new();
        variants.insert(default.clone());
        for id in desk_scale_variants(name) {
            variants.insert(id);
        }
        let list: Vec<String> = variants.into_iter().collect();
        println!("  {:<14} {}", name.as_str(), list.join(", "));
    }
}

fn default_env_id(name: EnvName) -> String {
    let size = name.default_size();
    match name {
        EnvName::KeyCorridor => format!("{}-s3r{size}", name.as_str()),
        _ => format!("{}-{size}x{size}", name.as_str()),
    }
}

/// Smaller-than-default variants that train quickly on a workstation.
fn desk_scale_variants(name: EnvName) -> Vec<String> {
    match name {
        EnvName::Empty => vec!["empty-6x6".into(), "empty-8x8".into()],
        EnvName::DoorKey => vec!["doorkey-5x5".into(), "doorkey-6x6".into()],
        EnvName::RedBlueDoors => vec!["redbluedoors-6x6".into()],
        EnvName::UnlockPickup => vec!["unlockpickup-4x4".into()],
        EnvName::KeyCorridor => vec!["keycorridor-s3r2".into()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn sweep_expansion_covers_the_comparison_grid() {
        let base = RunConfig::default();
        let entries = expand_sweep(&base);
        assert_eq!(entries.len(), 7);
        let fixed: Vec<f64> = entries
            .iter()
            .filter(|(_, c)| c.method == Method::IcmFixed)
            .map(|(_, c)| c.beta.fixed)
            .collect();
        assert_eq!(fixed, vec![0.1, 0.2, 0.5, 1.0, 2.0]);
        assert_eq!(
            entries
                .iter()
                .filter(|(_, c)| c.method == Method::Acwi)
                .count(),
            1
        );
        assert_eq!(
            entries
                .iter()
                .filter(|(_, c)| c.method == Method::Ppo)
                .count(),
            1
        );
        // Every entry gets its own subdirectory.
        let dirs: BTreeSet<&Path> = entries.iter().map(|(_, c)| c.out_dir.as_path()).collect();
        assert_eq!(dirs.len(), 7);
        for (label, cfg) in &entries {
            assert_eq!(cfg.out_dir, base.out_dir.join(label));
        }
    }

    #[test]
    fn every_listed_environment_id_parses() {
        for name in EnvName::ALL {
            let ids = std::iter::once(default_env_id(name)).chain(desk_scale_variants(name));
            for id in ids {
                acwi::env::parse_env_id(&id).unwrap_or_else(|e| panic!("{id}: {e}"));
            }
        }
    }

    #[test]
    fn config_errors_exit_two_and_runtime_errors_exit_one() {
        let config_err = Error::Config(ConfigError::Invalid("x".into()));
        assert_eq!(classify(&config_err), ("config", 2));
        let nested = Error::Train(TrainError::Config(ConfigError::Invalid("x".into())));
        assert_eq!(classify(&nested), ("config", 2));
        let runtime = Error::Train(TrainError::Serde("x".into()));
        assert_eq!(classify(&runtime).1, 1);
        let usage = Error::Analysis(AnalysisError::InvalidInput("x".into()));
        assert_eq!(classify(&usage), ("config", 2));
    }
}
