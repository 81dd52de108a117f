//! SVG line charts of CER and ensemble-weight trajectories.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    /// Every `step`-th value of `ys` (and always the last), indexed by
    /// position.
    pub fn downsampled(label: impl Into<String>, ys: &[f64], step: usize) -> Self {
        let step = step.max(1);
        let mut points: Vec<(f64, f64)> = ys.iter().enumerate().step_by(step).map(|(i, &y)| (i as f64, y)).collect();
        if let Some(&y) = ys.last() {
            let i = ys.len() - 1;
            if i % step != 0 {
                points.push((i as f64, y));
            }
        }
        PlotSeries { label: label.into(), points }
    }

    fn x_max(&self) -> f64 {
        self.points.last().map_or(1.0, |p| p.0)
    }
}

fn plot_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn draw_lines<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    y_desc: &str,
    y_range: std::ops::Range<f64>,
    series: &[PlotSeries],
) -> std::result::Result<(), DrawingAreaErrorKind<DB::ErrorType>> {
    let x_max = series.iter().map(PlotSeries::x_max).fold(1.0, f64::max);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..x_max, y_range)?;
    chart.configure_mesh().x_desc("t").y_desc(y_desc).draw()?;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()?;
    Ok(())
}

fn cer_range(series: &[PlotSeries]) -> std::ops::Range<f64> {
    let top = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(0.0, f64::max);
    0.0..(top * 1.1).clamp(0.05, 1.0)
}

/// Cumulative error rate of several methods over time.
pub fn plot_cer_trends(path: &Path, title: &str, series: &[PlotSeries]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    draw_lines(&root, title, "CER", cer_range(series), series).map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}

/// Ensemble weight on the observed-space learner (top) above the CER of
/// the full model and its single-learner variants (bottom).
pub fn plot_ablation(path: &Path, title: &str, alpha1: &PlotSeries, cer: &[PlotSeries]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let (top, bottom) = root.split_vertically(400);
    draw_lines(&top, &format!("{title}: alpha1"), "alpha1", 0.0..1.0, std::slice::from_ref(alpha1))
        .map_err(|e| plot_err(path, e))?;
    draw_lines(&bottom, &format!("{title}: CER"), "CER", cer_range(cer), cer).map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}
