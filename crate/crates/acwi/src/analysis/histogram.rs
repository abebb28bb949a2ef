//! Histograms of the learned intrinsic-scale values over training stages:
//! training is split into equal-width iteration windows and each window's
//! snapshot samples fill a fixed 40-bin histogram over the scale bounds.

use std::path::Path;

use crate::error::AnalysisError;

/// Number of histogram bins over the scale range.
pub const BETA_BINS: usize = 40;

/// One training stage's scale-value histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaHistogram {
    /// 0-based stage index.
    pub stage: usize,
    /// Inclusive iteration range this stage covers.
    pub iterations: (u64, u64),
    /// Sample count per bin; mass equals the number of samples in the stage.
    pub counts: Vec<u64>,
    /// Histogram range (the scale network's output bounds).
    pub lo: f64,
    pub hi: f64,
}

impl BetaHistogram {
    /// The `BETA_BINS + 1` bin edges. The first and last edge equal the
    /// range bounds exactly.
    pub fn edges(&self) -> Vec<f64> {
        let width = (self.hi - self.lo) / BETA_BINS as f64;
        (0..=BETA_BINS)
            .map(|i| {
                if i == BETA_BINS {
                    self.hi
                } else {
                    self.lo + i as f64 * width
                }
            })
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Build per-stage histograms from `(iteration, beta)` snapshot samples.
///
/// The observed iteration span is partitioned into `stages` equal-width
/// windows; every sample lands in exactly one window and one bin (values at
/// or beyond the bounds count into the edge bins, so no mass is dropped).
pub fn beta_histograms(
    samples: &[(u64, f64)],
    stages: usize,
    bounds: (f64, f64),
) -> Result<Vec<BetaHistogram>, AnalysisError> {
    if stages == 0 {
        return Err(AnalysisError::InvalidInput(
            "histogram needs at least one stage".into(),
        ));
    }
    if samples.is_empty() {
        return Err(AnalysisError::InvalidInput(
            "histogram needs at least one snapshot sample".into(),
        ));
    }
    let (lo_b, hi_b) = bounds;
    if !(lo_b.is_finite() && hi_b.is_finite() && lo_b < hi_b) {
        return Err(AnalysisError::InvalidInput(format!(
            "bad histogram bounds [{lo_b}, {hi_b}]"
        )));
    }

    let lo_it = samples.iter().map(|s| s.0).min().unwrap();
    let hi_it = samples.iter().map(|s| s.0).max().unwrap();
    let span = hi_it - lo_it + 1;

    let mut out: Vec<BetaHistogram> = (0..stages)
        .map(|stage| {
            // Equal-width windows; the last window absorbs rounding.
            let from = lo_it + (stage as u64 * span) / stages as u64;
            let to = if stage + 1 == stages {
                hi_it
            } else {
                lo_it + ((stage as u64 + 1) * span) / stages as u64 - 1
            };
            BetaHistogram {
                stage,
                iterations: (from, to),
                counts: vec![0; BETA_BINS],
                lo: lo_b,
                hi: hi_b,
            }
        })
        .collect();

    let width = (hi_b - lo_b) / BETA_BINS as f64;
    for &(iter, beta) in samples {
        let stage = (((iter - lo_it) as u128 * stages as u128) / span as u128) as usize;
        let stage = stage.min(stages - 1);
        let bin = if beta <= lo_b {
            0
        } else {
            (((beta - lo_b) / width) as usize).min(BETA_BINS - 1)
        };
        out[stage].counts[bin] += 1;
    }
    Ok(out)
}

/// Read `(iteration, beta)` pairs from a snapshot CSV.
pub fn read_snapshot_betas(path: &Path) -> Result<Vec<(u64, f64)>, AnalysisError> {
    let bad = |reason: String| AnalysisError::MalformedArtifact {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column named {name:?}")))
    };
    let iter_col = pos("iteration")?;
    let beta_col = pos("beta")?;

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let iter: u64 = row
            .get(iter_col)
            .unwrap_or_default()
            .parse()
            .map_err(|e| bad(format!("row {}: bad iteration: {e}", i + 1)))?;
        let beta: f64 = row
            .get(beta_col)
            .unwrap_or_default()
            .parse()
            .map_err(|e| bad(format!("row {}: bad beta: {e}", i + 1)))?;
        out.push((iter, beta));
    }
    out.sort_by_key(|s| s.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const BOUNDS: (f64, f64) = (0.1, 2.0);

    #[test]
    fn point_mass_occupies_exactly_one_bin() {
        let samples: Vec<(u64, f64)> = (1..=50).map(|i| (i, 1.0)).collect();
        let hists = beta_histograms(&samples, 1, BOUNDS).unwrap();
        assert_eq!(hists.len(), 1);
        let occupied: Vec<usize> = (0..BETA_BINS)
            .filter(|&b| hists[0].counts[b] > 0)
            .collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(hists[0].total(), 50);
        // 1.0 sits in bin floor((1.0 - 0.1) / (1.9 / 40)) = 18.
        assert_eq!(occupied[0], 18);
    }

    #[test]
    fn edges_span_the_bounds_exactly() {
        let hists = beta_histograms(&[(1, 0.5)], 1, BOUNDS).unwrap();
        let edges = hists[0].edges();
        assert_eq!(edges.len(), BETA_BINS + 1);
        assert_eq!(edges[0], 0.1);
        assert_eq!(edges[BETA_BINS], 2.0);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn boundary_values_count_into_the_edge_bins() {
        let samples = vec![(1, 0.1), (1, 2.0), (1, 2.0000001)];
        let hists = beta_histograms(&samples, 1, BOUNDS).unwrap();
        assert_eq!(hists[0].counts[0], 1);
        assert_eq!(hists[0].counts[BETA_BINS - 1], 2, "upper bound clamps in");
        assert_eq!(hists[0].total(), 3);
    }

    #[test]
    fn stages_partition_the_iteration_span_equally() {
        let samples: Vec<(u64, f64)> = (1..=100).map(|i| (i, 0.5)).collect();
        let hists = beta_histograms(&samples, 4, BOUNDS).unwrap();
        let ranges: Vec<(u64, u64)> = hists.iter().map(|h| h.iterations).collect();
        assert_eq!(ranges, vec![(1, 25), (26, 50), (51, 75), (76, 100)]);
        for h in &hists {
            assert_eq!(h.total(), 25);
        }
    }

    #[test]
    fn total_mass_is_conserved_across_stages_and_bins() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<(u64, f64)> = (0..1_000)
            .map(|_| (rng.random_range(1..=37), rng.random_range(0.1..2.0)))
            .collect();
        let mut sorted = samples.clone();
        sorted.sort_by_key(|s| s.0);
        let hists = beta_histograms(&sorted, 3, BOUNDS).unwrap();
        let mass: u64 = hists.iter().map(BetaHistogram::total).sum();
        assert_eq!(mass, 1_000);
    }

    #[test]
    fn uniform_samples_fill_bins_roughly_evenly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        let samples: Vec<(u64, f64)> = (0..n).map(|_| (1, rng.random_range(0.1..2.0))).collect();
        let hists = beta_histograms(&samples, 1, BOUNDS).unwrap();
        let expected = n as f64 / BETA_BINS as f64;
        for &c in &hists[0].counts {
            assert!(
                (c as f64 - expected).abs() < 0.2 * expected,
                "bin count {c} too far from uniform expectation {expected}"
            );
        }
    }

    #[test]
    fn empty_input_and_zero_stages_are_usage_errors() {
        assert!(beta_histograms(&[], 1, BOUNDS).is_err());
        assert!(beta_histograms(&[(1, 0.5)], 0, BOUNDS).is_err());
    }

    #[test]
    fn snapshot_reader_extracts_iteration_beta_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snapshots.csv");
        std::fs::write(
            &path,
            "iteration,obs_hash,beta,obs_hex\n2,00ff,0.9,ab\n1,00aa,1.1,cd\n",
        )
        .unwrap();
        let samples = read_snapshot_betas(&path).unwrap();
        assert_eq!(samples, vec![(1, 1.1), (2, 0.9)], "sorted by iteration");
    }
}
