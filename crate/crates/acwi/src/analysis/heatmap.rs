//! State-visitation heatmaps: per-cell counts of agent positions over a
//! phase of training, log-transformed for display.

use std::ops::Range;

use ndarray::Array2;

use crate::env::trace::TraceRecord;
use crate::error::AnalysisError;

/// Per-cell visit counts on a `width × height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitationGrid {
    pub width: usize,
    pub height: usize,
    /// Visit counts indexed `(x, y)`.
    pub counts: Array2<u64>,
}

impl VisitationGrid {
    /// Total recorded steps.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `ln(1 + count)` per cell, the quantity heatmap images display.
    pub fn log_counts(&self) -> Array2<f64> {
        self.counts.map(|&c| (1.0 + c as f64).ln())
    }
}

/// Count agent positions from trace records whose index (the order steps
/// were recorded in) falls inside `phase`. The range is clipped to the
/// number of records, so `0..usize::MAX` means "everything".
pub fn visitation_heatmap(
    records: &[TraceRecord],
    width: usize,
    height: usize,
    phase: Range<usize>,
) -> Result<VisitationGrid, AnalysisError> {
    if width == 0 || height == 0 {
        return Err(AnalysisError::InvalidInput(format!(
            "degenerate grid {width}x{height}"
        )));
    }
    let start = phase.start.min(records.len());
    let end = phase.end.min(records.len());
    let mut counts = Array2::zeros((width, height));
    for record in &records[start..end] {
        let (x, y) = record.agent_pos;
        if x >= width || y >= height {
            return Err(AnalysisError::InvalidInput(format!(
                "agent position ({x}, {y}) outside {width}x{height} grid"
            )));
        }
        counts[(x, y)] += 1;
    }
    Ok(VisitationGrid {
        width,
        height,
        counts,
    })
}
