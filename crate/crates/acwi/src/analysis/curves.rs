//! Learning-curve aggregation: per-seed series are smoothed, brought onto a
//! common step grid, and reduced to a pointwise mean with a population
//! standard-deviation band.

use std::path::Path;

use crate::error::AnalysisError;
use crate::nn::stats;

/// One seed's metric trajectory: a value at each environment-step count.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSeries {
    pub steps: Vec<u64>,
    pub values: Vec<f64>,
}

/// Cross-seed aggregate on a shared step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedCurve {
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    /// Population standard deviation across seeds (zero for a single seed).
    pub std: Vec<f64>,
}

/// Trailing moving average: element `i` becomes the mean of the last
/// `window` values up to and including `i` (fewer near the start). A window
/// of 0 or 1 returns the input unchanged.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return xs.to_vec();
    }
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        let len = (i + 1).min(window);
        out.push(sum / len as f64);
    }
    out
}

/// Value of a series at `step`, linearly interpolated between its recorded
/// grid points. `step` must lie inside the series' range.
fn interpolate(series: &SeedSeries, step: u64) -> f64 {
    let steps = &series.steps;
    match steps.binary_search(&step) {
        Ok(i) => series.values[i],
        Err(i) => {
            let (lo, hi) = (i - 1, i);
            let span = (steps[hi] - steps[lo]) as f64;
            let t = (step - steps[lo]) as f64 / span;
            series.values[lo] + t * (series.values[hi] - series.values[lo])
        }
    }
}

/// Aggregate one method's per-seed series into mean ± std curves.
///
/// Each series is smoothed with a trailing moving average of `window`
/// points first. If the step grids differ, every series is linearly
/// interpolated onto the first seed's grid restricted to the step range all
/// seeds cover; identical grids pass through unchanged.
pub fn aggregate_curves(
    seeds: &[SeedSeries],
    window: usize,
) -> Result<AggregatedCurve, AnalysisError> {
    if seeds.is_empty() {
        return Err(AnalysisError::InvalidInput(
            "curve aggregation needs at least one seed series".into(),
        ));
    }
    for (i, s) in seeds.iter().enumerate() {
        if s.steps.len() != s.values.len() {
            return Err(AnalysisError::InvalidInput(format!(
                "seed series {i}: {} steps but {} values",
                s.steps.len(),
                s.values.len()
            )));
        }
        if s.steps.is_empty() {
            return Err(AnalysisError::InvalidInput(format!(
                "seed series {i} is empty"
            )));
        }
        if s.steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AnalysisError::InvalidInput(format!(
                "seed series {i}: steps must be strictly increasing"
            )));
        }
    }

    let smoothed: Vec<SeedSeries> = seeds
        .iter()
        .map(|s| SeedSeries {
            steps: s.steps.clone(),
            values: moving_average(&s.values, window),
        })
        .collect();

    let lo = smoothed.iter().map(|s| s.steps[0]).max().unwrap();
    let hi = smoothed
        .iter()
        .map(|s| *s.steps.last().unwrap())
        .min()
        .unwrap();
    if lo > hi {
        return Err(AnalysisError::InvalidInput(
            "seed series have no overlapping step range".into(),
        ));
    }
    let grid: Vec<u64> = smoothed[0]
        .steps
        .iter()
        .copied()
        .filter(|&s| (lo..=hi).contains(&s))
        .collect();

    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    let mut column = vec![0.0; smoothed.len()];
    for &step in &grid {
        for (c, s) in column.iter_mut().zip(&smoothed) {
            *c = interpolate(s, step);
        }
        mean.push(stats::mean(&column));
        std.push(stats::population_std(&column));
    }
    Ok(AggregatedCurve { steps: grid, mean, std })
}

/// Read one named column out of a headered CSV artifact as a series over
/// `env_steps`. Rows where the column is empty (a stage that did not run
/// that iteration) are skipped.
pub fn read_column_series(path: &Path, column: &str) -> Result<SeedSeries, AnalysisError> {
    let bad = |reason: String| AnalysisError::MalformedArtifact {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| bad(format!("no column named {column:?}")))?;
    let step_col = headers
        .iter()
        .position(|h| h == "env_steps")
        .ok_or_else(|| bad("no env_steps column".to_string()))?;

    let mut steps = Vec::new();
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let raw = row
            .get(col)
            .ok_or_else(|| bad(format!("row {}: missing field {column}", i + 1)))?;
        if raw.is_empty() {
            continue;
        }
        let value: f64 = raw
            .parse()
            .map_err(|e| bad(format!("row {}: bad {column}: {e}", i + 1)))?;
        let step: u64 = row
            .get(step_col)
            .unwrap_or_default()
            .parse()
            .map_err(|e| bad(format!("row {}: bad env_steps: {e}", i + 1)))?;
        steps.push(step);
        values.push(value);
    }
    Ok(SeedSeries { steps, values })
}
