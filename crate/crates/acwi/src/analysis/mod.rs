//! Post-hoc analyses over training artifacts: learning-curve aggregation
//! with cross-seed bands, scale-factor distribution histograms over
//! training stages, state-visitation heatmaps, and two-component principal
//! component projections of learned state representations.
//!
//! Every analysis is a pure function of its input files; rendering emits a
//! CSV (the stable, tested contract) next to each image.

mod curves;
mod driver;
mod heatmap;
mod histogram;
mod pca;
mod render;

pub use curves::{aggregate_curves, moving_average, read_column_series, AggregatedCurve, SeedSeries};
pub use driver::{analyze_experiments, AnalyzeOptions};
pub use heatmap::{visitation_heatmap, VisitationGrid};
pub use histogram::{beta_histograms, read_snapshot_betas, BetaHistogram, BETA_BINS};
pub use pca::{pca_project, PcaResult};
pub use render::{
    render_plots, write_curves_csv, write_heatmap_csv, write_histogram_csv, write_pca_csv,
    AnalysisOutputs,
};
