//! Experiment-level analysis driver: reads one or more experiment output
//! directories (each with a manifest) and produces every applicable
//! analysis artifact — curves across methods, scale histograms, visitation
//! heatmaps, and the representation projection.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beta::BetaNet;
use crate::config::{Method, RunConfig};
use crate::env::{self, flatten_codes, trace::TraceRecord, OBS_LEN};
use crate::error::AnalysisError;
use crate::icm::IcmNets;
use crate::nn::ParamSet;
use crate::trainer::{decode_obs_hex, Manifest};

use super::curves::{aggregate_curves, read_column_series, SeedSeries};
use super::heatmap::visitation_heatmap;
use super::histogram::{beta_histograms, read_snapshot_betas};
use super::pca::pca_project;
use super::render::{render_plots, AnalysisOutputs};

/// Knobs for [`analyze_experiments`].
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    /// Moving-average window applied to each seed's curve.
    pub smoothing_window: usize,
    /// Number of training-stage windows for the scale histograms.
    pub stages: usize,
    /// Which column to aggregate. Evaluation columns (`mean_return`,
    /// `success_rate`, `mean_length`) read the eval CSVs; anything else
    /// reads the training metrics CSVs.
    pub curve_column: String,
    /// Project curiosity-encoder features instead of the scale network's
    /// embeddings.
    pub use_icm_encoder: bool,
    /// Cap on the number of projected points.
    pub max_pca_points: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            smoothing_window: 10,
            stages: 4,
            curve_column: "mean_return".into(),
            use_icm_encoder: false,
            max_pca_points: 4096,
        }
    }
}

const EVAL_COLUMNS: [&str; 3] = ["mean_return", "success_rate", "mean_length"];

struct LoadedRun {
    dir: PathBuf,
    manifest: Manifest,
    cfg: RunConfig,
}

fn bad(path: &Path, reason: String) -> AnalysisError {
    AnalysisError::MalformedArtifact {
        path: path.display().to_string(),
        reason,
    }
}

/// Analyze every experiment directory (each must contain a `manifest.json`
/// written by training) together and render the combined artifacts into
/// `out_dir`. Returns the created file paths.
pub fn analyze_experiments(
    run_dirs: &[PathBuf],
    options: &AnalyzeOptions,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalysisError> {
    if run_dirs.is_empty() {
        return Err(AnalysisError::InvalidInput(
            "need at least one experiment directory".into(),
        ));
    }
    let mut runs = Vec::with_capacity(run_dirs.len());
    for dir in run_dirs {
        let manifest_path = dir.join("manifest.json");
        let manifest =
            Manifest::load(&manifest_path).map_err(|e| bad(&manifest_path, e.to_string()))?;
        let cfg = RunConfig::from_toml_str(&manifest.config_toml)
            .map_err(|e| bad(&manifest_path, format!("embedded config: {e}")))?;
        runs.push(LoadedRun {
            dir: dir.clone(),
            manifest,
            cfg,
        });
    }
    let env_label = runs[0].manifest.env.clone();
    if let Some(other) = runs.iter().find(|r| r.manifest.env != env_label) {
        return Err(AnalysisError::InvalidInput(format!(
            "experiments span different environments: {env_label} vs {}",
            other.manifest.env
        )));
    }

    let mut outputs = AnalysisOutputs {
        env: env_label,
        ..Default::default()
    };
    for run in &runs {
        if let Some(curve) = method_curve(run, options)? {
            outputs.curves.push((method_label(run), curve));
        }
        if let Some(grid) = method_heatmap(run)? {
            outputs.heatmaps.push((method_label(run), grid));
        }
    }
    if let Some(acwi) = runs.iter().find(|r| r.cfg.method == Method::Acwi) {
        let samples = all_snapshot_betas(acwi)?;
        if !samples.is_empty() {
            let bounds = (acwi.cfg.beta.bounds[0], acwi.cfg.beta.bounds[1]);
            outputs.histograms = beta_histograms(&samples, options.stages, bounds)?;
        }
        outputs.pca = representation_projection(acwi, options)?;
    }
    render_plots(&outputs, out_dir)
}

/// Label methods unambiguously: the fixed-scale baseline carries its
/// coefficient so sweep entries stay distinct.
fn method_label(run: &LoadedRun) -> String {
    match run.cfg.method {
        Method::IcmFixed => format!("icm_fixed_{}", run.cfg.beta.fixed),
        _ => run.manifest.method.clone(),
    }
}

fn method_curve(
    run: &LoadedRun,
    options: &AnalyzeOptions,
) -> Result<Option<super::curves::AggregatedCurve>, AnalysisError> {
    let from_eval = EVAL_COLUMNS.contains(&options.curve_column.as_str());
    let mut seeds: Vec<SeedSeries> = Vec::new();
    for artifact in &run.manifest.runs {
        let file = if from_eval {
            &artifact.eval
        } else {
            &artifact.metrics
        };
        let series = read_column_series(&run.dir.join(file), &options.curve_column)?;
        if !series.steps.is_empty() {
            seeds.push(series);
        }
    }
    if seeds.is_empty() {
        return Ok(None);
    }
    Ok(Some(aggregate_curves(&seeds, options.smoothing_window)?))
}

fn method_heatmap(run: &LoadedRun) -> Result<Option<super::heatmap::VisitationGrid>, AnalysisError> {
    let mut records: Vec<TraceRecord> = Vec::new();
    for artifact in &run.manifest.runs {
        let Some(name) = &artifact.trace else {
            continue;
        };
        let path = run.dir.join(name);
        let reader = BufReader::new(File::open(&path)?);
        let seed_records =
            env::trace::read_records(reader).map_err(|e| bad(&path, e.to_string()))?;
        records.extend(seed_records);
    }
    if records.is_empty() {
        return Ok(None);
    }
    let (name, size) = run
        .cfg
        .env_selection()
        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))?;
    let probe = env::make_env(name, size, 0)
        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))?;
    let grid = visitation_heatmap(&records, probe.width, probe.height, 0..usize::MAX)?;
    Ok(Some(grid))
}

fn all_snapshot_betas(run: &LoadedRun) -> Result<Vec<(u64, f64)>, AnalysisError> {
    let mut samples = Vec::new();
    for artifact in &run.manifest.runs {
        if let Some(name) = &artifact.snapshots {
            samples.extend(read_snapshot_betas(&run.dir.join(name))?);
        }
    }
    samples.sort_by_key(|s| s.0);
    Ok(samples)
}

/// Read the final snapshot block of one seed: the raw observation codes
/// recorded at the last snapshot iteration.
fn final_snapshot_codes(path: &Path) -> Result<Vec<Vec<u8>>, AnalysisError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(path, e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(path, e.to_string()))?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(path, format!("no column named {name:?}")))
    };
    let iter_col = pos("iteration")?;
    let hex_col = pos("obs_hex")?;
    let mut last_iter = 0u64;
    let mut codes: Vec<Vec<u8>> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(path, e.to_string()))?;
        let iter: u64 = row
            .get(iter_col)
            .unwrap_or_default()
            .parse()
            .map_err(|e| bad(path, format!("bad iteration: {e}")))?;
        if iter > last_iter {
            last_iter = iter;
            codes.clear();
        }
        if iter == last_iter {
            let decoded = decode_obs_hex(row.get(hex_col).unwrap_or_default())
                .map_err(|e| bad(path, e.to_string()))?;
            codes.push(decoded);
        }
    }
    Ok(codes)
}

/// Verify a loaded parameter file matches the freshly built template.
fn check_params(
    path: &Path,
    loaded: &ParamSet,
    template: &ParamSet,
) -> Result<(), AnalysisError> {
    if loaded.len() != template.len() {
        return Err(bad(
            path,
            format!(
                "{} parameters, expected {}",
                loaded.len(),
                template.len()
            ),
        ));
    }
    for (name, entry) in template.iter() {
        let got = loaded
            .values(name)
            .map_err(|_| bad(path, format!("missing parameter '{name}'")))?;
        if got.dim() != entry.values.dim() {
            return Err(bad(
                path,
                format!(
                    "parameter '{name}' has shape {:?}, expected {:?}",
                    got.dim(),
                    entry.values.dim()
                ),
            ));
        }
    }
    Ok(())
}

/// Project the final-iteration snapshot states through the learned encoder
/// (the scale network's by default, the curiosity module's behind the
/// flag), colored by the scale each state receives.
fn representation_projection(
    run: &LoadedRun,
    options: &AnalyzeOptions,
) -> Result<Option<(super::pca::PcaResult, Vec<f64>)>, AnalysisError> {
    let Some(artifact) = run.manifest.runs.first() else {
        return Ok(None);
    };
    let Some(snapshot_name) = &artifact.snapshots else {
        return Ok(None);
    };
    let Some(ckpt) = artifact.checkpoints.last() else {
        return Ok(None);
    };
    let mut codes = final_snapshot_codes(&run.dir.join(snapshot_name))?;
    codes.truncate(options.max_pca_points);
    if codes.len() < 3 {
        return Ok(None);
    }

    let mut obs = Array2::zeros((codes.len(), OBS_LEN));
    for (i, c) in codes.iter().enumerate() {
        obs.row_mut(i)
            .assign(&ndarray::Array1::from(flatten_codes(c)));
    }

    // Rebuild the networks from the embedded config and load the final
    // checkpoint, so representations and colors reflect the same weights.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = &run.cfg.beta;
    let mut net = BetaNet::new(
        b.encoding_dim,
        (b.bounds[0], b.bounds[1]),
        b.reference,
        &mut rng,
    );
    let beta_path = run.dir.join(ckpt).join("beta.params");
    let loaded = ParamSet::load(&beta_path).map_err(|e| bad(&beta_path, e.to_string()))?;
    check_params(&beta_path, &loaded, &net.params)?;
    net.params = loaded;
    let betas = net
        .forward(&obs)
        .map_err(|e| AnalysisError::Numerical(e.to_string()))?;

    let representations = if options.use_icm_encoder {
        let icm_cfg = &run.cfg.icm;
        let mut icm = IcmNets::new(
            icm_cfg.feature_dim,
            icm_cfg.hidden_dim,
            icm_cfg.detach_next_feature,
            &mut rng,
        );
        let icm_path = run.dir.join(ckpt).join("icm.params");
        let loaded = ParamSet::load(&icm_path).map_err(|e| bad(&icm_path, e.to_string()))?;
        check_params(&icm_path, &loaded, &icm.params)?;
        icm.params = loaded;
        icm.encode(&obs)
            .map_err(|e| AnalysisError::Numerical(e.to_string()))?
    } else {
        net.embed(&obs)
            .map_err(|e| AnalysisError::Numerical(e.to_string()))?
    };

    match pca_project(&representations, &betas) {
        Ok(pca) => Ok(Some((pca, betas))),
        // Degenerate clouds (e.g. one repeated state) simply skip the plot.
        Err(AnalysisError::InvalidInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;
    use crate::trainer::{run_experiment_with, TickClock};

    fn train_tiny(dir: &Path, method: Method, seeds: Vec<u64>) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.method = method;
        cfg.seeds = seeds;
        cfg.env.name = "empty-6x6".into();
        cfg.rollout.num_envs = 2;
        cfg.rollout.steps_per_env = 16;
        cfg.total_steps = 128;
        cfg.ppo.hidden = vec![8];
        cfg.ppo.minibatch_size = 16;
        cfg.icm.feature_dim = 8;
        cfg.icm.hidden_dim = 8;
        cfg.icm.minibatch_size = 16;
        cfg.beta.encoding_dim = 8;
        cfg.eval.every = 2;
        cfg.eval.episodes = 2;
        cfg.artifacts.snapshot_every = 2;
        cfg.artifacts.snapshot_samples = 16;
        cfg.artifacts.trace_steps = 64;
        cfg.out_dir = dir.to_path_buf();
        run_experiment_with(&cfg, &mut |_| Box::new(TickClock::new(1.0))).unwrap();
        cfg
    }

    #[test]
    fn full_pipeline_renders_curves_histograms_heatmaps_and_projection() {
        let tmp = tempfile::tempdir().unwrap();
        let acwi_dir = tmp.path().join("acwi");
        let ppo_dir = tmp.path().join("ppo");
        train_tiny(&acwi_dir, Method::Acwi, vec![0, 1]);
        train_tiny(&ppo_dir, Method::Ppo, vec![0]);

        let out = tmp.path().join("analysis");
        let options = AnalyzeOptions {
            stages: 2,
            ..AnalyzeOptions::default()
        };
        let written =
            analyze_experiments(&[acwi_dir, ppo_dir], &options, &out).unwrap();

        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"curves_empty-6x6.csv".to_string()), "{names:?}");
        assert!(names.contains(&"beta_hist_empty-6x6_0.csv".to_string()));
        assert!(names.contains(&"beta_hist_empty-6x6_1.csv".to_string()));
        assert!(names.contains(&"heatmap_empty-6x6_acwi.csv".to_string()));
        assert!(names.contains(&"heatmap_empty-6x6_ppo.csv".to_string()));
        assert!(names.contains(&"pca_empty-6x6.csv".to_string()));
        for p in &written {
            assert!(std::fs::metadata(p).unwrap().len() > 0);
        }

        // The curves CSV covers both methods.
        let curves = std::fs::read_to_string(out.join("curves_empty-6x6.csv")).unwrap();
        assert!(curves.lines().skip(1).any(|l| l.starts_with("acwi,")));
        assert!(curves.lines().skip(1).any(|l| l.starts_with("ppo,")));

        // Projection rows carry in-range scale colors.
        let pca = std::fs::read_to_string(out.join("pca_empty-6x6.csv")).unwrap();
        for line in pca.lines().skip(1) {
            let beta: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!((0.1..=2.0).contains(&beta));
        }
    }

    #[test]
    fn mixed_environments_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        train_tiny(&a, Method::Ppo, vec![0]);
        let mut cfg = RunConfig::default();
        cfg.method = Method::Ppo;
        cfg.seeds = vec![0];
        cfg.env.name = "empty-8x8".into();
        cfg.rollout.num_envs = 2;
        cfg.rollout.steps_per_env = 16;
        cfg.total_steps = 32;
        cfg.ppo.hidden = vec![8];
        cfg.ppo.minibatch_size = 16;
        cfg.artifacts.trace_steps = 0;
        cfg.out_dir = b.clone();
        run_experiment_with(&cfg, &mut |_| Box::new(TickClock::new(1.0))).unwrap();

        let err = analyze_experiments(
            &[a, b],
            &AnalyzeOptions::default(),
            &tmp.path().join("out"),
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::InvalidInput(_)), "{err}");
    }

    #[test]
    fn missing_manifest_is_a_malformed_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let err = analyze_experiments(
            &[tmp.path().join("nope")],
            &AnalyzeOptions::default(),
            &tmp.path().join("out"),
        )
        .unwrap_err();
        assert!(matches!(err, AnalysisError::MalformedArtifact { .. }), "{err}");
    }

    #[test]
    fn fixed_scale_sweep_entries_get_distinct_labels() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("fixed");
        let mut cfg = train_tiny(&dir, Method::IcmFixed, vec![0]);
        cfg.beta.fixed = 0.5;
        let run = LoadedRun {
            dir: dir.clone(),
            manifest: Manifest::load(&dir.join("manifest.json")).unwrap(),
            cfg,
        };
        assert_eq!(method_label(&run), "icm_fixed_0.5");
    }
}
