//! Artifact rendering: every analysis writes a CSV (the tested, stable
//! contract) plus a static PNG mirroring it for quick inspection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::AnalysisError;

use super::curves::AggregatedCurve;
use super::heatmap::VisitationGrid;
use super::histogram::BetaHistogram;
use super::pca::PcaResult;

/// Everything one experiment's analyses produced, ready to render.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOutputs {
    /// Environment label used in file names, e.g. `doorkey-6x6`.
    pub env: String,
    /// Aggregated learning curves, one per method.
    pub curves: Vec<(String, AggregatedCurve)>,
    /// Scale-distribution histograms, one per training stage.
    pub histograms: Vec<BetaHistogram>,
    /// Visitation grids, one per method.
    pub heatmaps: Vec<(String, VisitationGrid)>,
    /// Representation projection with the scale value per point.
    pub pca: Option<(PcaResult, Vec<f64>)>,
}

/// Write every CSV and PNG for `outputs` under `out_dir`; returns the paths
/// created. File contents are a pure function of `outputs`, so a rerun
/// produces byte-identical CSVs.
pub fn render_plots(
    outputs: &AnalysisOutputs,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalysisError> {
    std::fs::create_dir_all(out_dir)?;
    let env = &outputs.env;
    let mut written = Vec::new();
    let mut emit = |path: PathBuf| written.push(path);

    if !outputs.curves.is_empty() {
        let csv = out_dir.join(format!("curves_{env}.csv"));
        write_curves_csv(&mut file_writer(&csv)?, &outputs.curves)?;
        let png = csv.with_extension("png");
        render_curves_png(&png, &outputs.curves)?;
        emit(csv);
        emit(png);
    }
    for hist in &outputs.histograms {
        let csv = out_dir.join(format!("beta_hist_{env}_{}.csv", hist.stage));
        write_histogram_csv(&mut file_writer(&csv)?, hist)?;
        let png = csv.with_extension("png");
        render_histogram_png(&png, hist)?;
        emit(csv);
        emit(png);
    }
    for (method, grid) in &outputs.heatmaps {
        let csv = out_dir.join(format!("heatmap_{env}_{method}.csv"));
        write_heatmap_csv(&mut file_writer(&csv)?, grid)?;
        let png = csv.with_extension("png");
        render_heatmap_png(&png, grid)?;
        emit(csv);
        emit(png);
    }
    if let Some((pca, betas)) = &outputs.pca {
        let csv = out_dir.join(format!("pca_{env}.csv"));
        write_pca_csv(&mut file_writer(&csv)?, pca, betas)?;
        let png = csv.with_extension("png");
        render_pca_png(&png, pca, betas)?;
        emit(csv);
        emit(png);
    }
    Ok(written)
}

fn file_writer(path: &Path) -> Result<BufWriter<File>, AnalysisError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Schema: `method,steps,mean,std`, one row per grid point per method.
pub fn write_curves_csv(
    w: &mut impl Write,
    curves: &[(String, AggregatedCurve)],
) -> Result<(), AnalysisError> {
    writeln!(w, "method,steps,mean,std")?;
    for (method, curve) in curves {
        for i in 0..curve.steps.len() {
            writeln!(
                w,
                "{method},{},{},{}",
                curve.steps[i], curve.mean[i], curve.std[i]
            )?;
        }
    }
    Ok(())
}

/// Schema: `bin_lo,bin_hi,count`, one row per bin.
pub fn write_histogram_csv(w: &mut impl Write, hist: &BetaHistogram) -> Result<(), AnalysisError> {
    writeln!(w, "bin_lo,bin_hi,count")?;
    let edges = hist.edges();
    for (i, &count) in hist.counts.iter().enumerate() {
        writeln!(w, "{},{},{count}", edges[i], edges[i + 1])?;
    }
    Ok(())
}

/// A headerless `height × width` matrix of raw visit counts: row `y`,
/// column `x`. Dimensions equal the grid's.
pub fn write_heatmap_csv(w: &mut impl Write, grid: &VisitationGrid) -> Result<(), AnalysisError> {
    for y in 0..grid.height {
        let row: Vec<String> = (0..grid.width)
            .map(|x| grid.counts[(x, y)].to_string())
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Schema: `pc1,pc2,beta`, one row per projected point.
pub fn write_pca_csv(
    w: &mut impl Write,
    pca: &PcaResult,
    betas: &[f64],
) -> Result<(), AnalysisError> {
    writeln!(w, "pc1,pc2,beta")?;
    for (row, &beta) in pca.projected.rows().into_iter().zip(betas) {
        writeln!(w, "{},{},{beta}", row[0], row[1])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// PNG rendering. Presentation only: minimal axes, fixed palette, no text.

const PLOT_W: u32 = 640;
const PLOT_H: u32 = 480;
const MARGIN: u32 = 32;
const BG: Rgb<u8> = Rgb([255, 255, 255]);
const FRAME: Rgb<u8> = Rgb([60, 60, 60]);
const PALETTE: [Rgb<u8>; 7] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
    Rgb([140, 86, 75]),
    Rgb([127, 127, 127]),
];

struct Canvas {
    img: RgbImage,
}

impl Canvas {
    fn new(w: u32, h: u32) -> Canvas {
        let mut img = RgbImage::new(w, h);
        for p in img.pixels_mut() {
            *p = BG;
        }
        Canvas { img }
    }

    fn put(&mut self, x: i64, y: i64, color: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, color);
        }
    }

    fn blend(&mut self, x: i64, y: i64, color: Rgb<u8>, alpha: f64) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            let old = self.img.get_pixel(x as u32, y as u32);
            let mix = |a: u8, b: u8| (a as f64 * (1.0 - alpha) + b as f64 * alpha) as u8;
            let px = Rgb([
                mix(old[0], color[0]),
                mix(old[1], color[1]),
                mix(old[2], color[2]),
            ]);
            self.img.put_pixel(x as u32, y as u32, px);
        }
    }

    fn line(&mut self, mut x0: i64, mut y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, color);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                self.put(x, y, color);
            }
        }
    }

    fn frame(&mut self) {
        let (w, h) = (PLOT_W as i64, PLOT_H as i64);
        let m = MARGIN as i64;
        self.line(m, m, w - m, m, FRAME);
        self.line(m, h - m, w - m, h - m, FRAME);
        self.line(m, m, m, h - m, FRAME);
        self.line(w - m, m, w - m, h - m, FRAME);
    }

    fn save(&self, path: &Path) -> Result<(), AnalysisError> {
        self.img
            .save(path)
            .map_err(|e| AnalysisError::Numerical(format!("png encode {}: {e}", path.display())))
    }
}

/// Map data coordinates onto the framed plot area.
struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn to_px(&self, x: f64, y: f64) -> (i64, i64) {
        let m = MARGIN as f64;
        let fx = if self.x_hi > self.x_lo {
            (x - self.x_lo) / (self.x_hi - self.x_lo)
        } else {
            0.5
        };
        let fy = if self.y_hi > self.y_lo {
            (y - self.y_lo) / (self.y_hi - self.y_lo)
        } else {
            0.5
        };
        let px = m + fx * (PLOT_W as f64 - 2.0 * m);
        let py = (PLOT_H as f64 - m) - fy * (PLOT_H as f64 - 2.0 * m);
        (px.round() as i64, py.round() as i64)
    }
}

fn render_curves_png(
    path: &Path,
    curves: &[(String, AggregatedCurve)],
) -> Result<(), AnalysisError> {
    let mut canvas = Canvas::new(PLOT_W, PLOT_H);
    let mut axes = Axes {
        x_lo: f64::INFINITY,
        x_hi: f64::NEG_INFINITY,
        y_lo: f64::INFINITY,
        y_hi: f64::NEG_INFINITY,
    };
    for (_, c) in curves {
        for i in 0..c.steps.len() {
            axes.x_lo = axes.x_lo.min(c.steps[i] as f64);
            axes.x_hi = axes.x_hi.max(c.steps[i] as f64);
            axes.y_lo = axes.y_lo.min(c.mean[i] - c.std[i]);
            axes.y_hi = axes.y_hi.max(c.mean[i] + c.std[i]);
        }
    }
    if !axes.x_lo.is_finite() {
        axes = Axes {
            x_lo: 0.0,
            x_hi: 1.0,
            y_lo: 0.0,
            y_hi: 1.0,
        };
    }
    for (k, (_, c)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        // Standard-deviation band.
        for i in 0..c.steps.len() {
            let (x, y_hi) = axes.to_px(c.steps[i] as f64, c.mean[i] + c.std[i]);
            let (_, y_lo) = axes.to_px(c.steps[i] as f64, c.mean[i] - c.std[i]);
            for y in y_hi..=y_lo {
                canvas.blend(x, y, color, 0.2);
            }
        }
        // Mean line.
        for i in 1..c.steps.len() {
            let (x0, y0) = axes.to_px(c.steps[i - 1] as f64, c.mean[i - 1]);
            let (x1, y1) = axes.to_px(c.steps[i] as f64, c.mean[i]);
            canvas.line(x0, y0, x1, y1, color);
        }
    }
    canvas.frame();
    canvas.save(path)
}

fn render_histogram_png(path: &Path, hist: &BetaHistogram) -> Result<(), AnalysisError> {
    let mut canvas = Canvas::new(PLOT_W, PLOT_H);
    let max = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let axes = Axes {
        x_lo: hist.lo,
        x_hi: hist.hi,
        y_lo: 0.0,
        y_hi: max,
    };
    let edges = hist.edges();
    for (i, &count) in hist.counts.iter().enumerate() {
        let (x0, y0) = axes.to_px(edges[i], 0.0);
        let (x1, y1) = axes.to_px(edges[i + 1], count as f64);
        canvas.rect(x0 + 1, y1, x1 - 1, y0, PALETTE[0]);
    }
    canvas.frame();
    canvas.save(path)
}

/// Color ramp from dark blue (low) through teal to yellow (high).
fn ramp(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t.powi(2)) as u8;
    let g = (255.0 * t) as u8;
    let b = (90.0 + 120.0 * (1.0 - t)) as u8;
    Rgb([r, g, b])
}

fn render_heatmap_png(path: &Path, grid: &VisitationGrid) -> Result<(), AnalysisError> {
    let logs = grid.log_counts();
    let max = logs.iter().fold(0.0f64, |m, &v| m.max(v)).max(1e-12);
    let cell = (512 / grid.width.max(grid.height)).clamp(1, 64) as u32;
    let mut canvas = Canvas::new(cell * grid.width as u32, cell * grid.height as u32);
    for y in 0..grid.height {
        for x in 0..grid.width {
            let color = ramp(logs[(x, y)] / max);
            let x0 = (x as u32 * cell) as i64;
            let y0 = (y as u32 * cell) as i64;
            canvas.rect(x0, y0, x0 + cell as i64 - 1, y0 + cell as i64 - 1, color);
        }
    }
    canvas.save(path)
}

fn render_pca_png(path: &Path, pca: &PcaResult, betas: &[f64]) -> Result<(), AnalysisError> {
    let mut canvas = Canvas::new(PLOT_W, PLOT_H);
    let mut axes = Axes {
        x_lo: f64::INFINITY,
        x_hi: f64::NEG_INFINITY,
        y_lo: f64::INFINITY,
        y_hi: f64::NEG_INFINITY,
    };
    for row in pca.projected.rows() {
        axes.x_lo = axes.x_lo.min(row[0]);
        axes.x_hi = axes.x_hi.max(row[0]);
        axes.y_lo = axes.y_lo.min(row[1]);
        axes.y_hi = axes.y_hi.max(row[1]);
    }
    let (b_lo, b_hi) = betas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| {
            (lo.min(b), hi.max(b))
        });
    let span = (b_hi - b_lo).max(1e-12);
    for (row, &beta) in pca.projected.rows().into_iter().zip(betas) {
        let (x, y) = axes.to_px(row[0], row[1]);
        let color = ramp((beta - b_lo) / span);
        canvas.rect(x - 1, y - 1, x + 1, y + 1, color);
    }
    canvas.frame();
    canvas.save(path)
}
