//! Deterministic SVG scatter-plus-fit charts. No timestamps, no random
//! ids: the same spec always renders byte-identical markup.

use crate::fit::{PowerLawFit, SamplePoint};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axes {
    Linear,
    LogLog,
}

/// One scatter series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<SamplePoint>,
}

/// One fitted curve to draw across the data range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub label: String,
    pub fit: PowerLawFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub title: String,
    #[serde(default = "ChartSpec::default_x_label")]
    pub x_label: String,
    #[serde(default = "ChartSpec::default_y_label")]
    pub y_label: String,
    pub axes: Axes,
    pub series: Vec<Series>,
    #[serde(default)]
    pub fits: Vec<LabeledFit>,
}

impl ChartSpec {
    fn default_x_label() -> String {
        "compute budget (1e15 FLOPs)".into()
    }
    fn default_y_label() -> String {
        "CER (%)".into()
    }

    pub fn new(title: impl Into<String>, axes: Axes) -> Self {
        ChartSpec {
            title: title.into(),
            x_label: Self::default_x_label(),
            y_label: Self::default_y_label(),
            axes,
            series: Vec::new(),
            fits: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("no series to draw")]
    NoSeries,
    #[error("series {label:?} has no points")]
    EmptySeries { label: String },
    #[error("series {label:?} point {index}: log axes need positive values")]
    NonPositiveValue { label: String, index: usize },
    #[error("series {label:?} point {index}: values must be finite")]
    NonFinite { label: String, index: usize },
    #[error("fit curves need positive budgets in the data range")]
    FitsNeedPositiveBudgets,
}

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 210.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 65.0;
const FIT_SAMPLES: usize = 200;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Monotone transform to screen-mapping space.
fn forward(axes: Axes, v: f64) -> f64 {
    match axes {
        Axes::Linear => v,
        Axes::LogLog => v.ln(),
    }
}

struct Scale {
    axes: Axes,
    t_min: f64,
    t_max: f64,
    px_min: f64,
    px_max: f64,
}

impl Scale {
    fn new(axes: Axes, values: impl Iterator<Item = f64>, px_min: f64, px_max: f64) -> Self {
        let mut t_min = f64::INFINITY;
        let mut t_max = f64::NEG_INFINITY;
        for v in values {
            let t = forward(axes, v);
            t_min = t_min.min(t);
            t_max = t_max.max(t);
        }
        // Pad 4% each side; synthesize a span for single-valued data.
        let span = t_max - t_min;
        let pad = if span > 0.0 { 0.04 * span } else { t_min.abs().max(1.0) * 0.05 };
        Scale { axes, t_min: t_min - pad, t_max: t_max + pad, px_min, px_max }
    }

    fn to_px(&self, v: f64) -> f64 {
        let t = forward(self.axes, v);
        let frac = (t - self.t_min) / (self.t_max - self.t_min);
        self.px_min + frac * (self.px_max - self.px_min)
    }

    /// Tick values in data space. Log axes get decade ticks when the range
    /// covers at least two decades, otherwise nice linear values placed on
    /// the log scale.
    fn ticks(&self) -> Vec<f64> {
        let (lo, hi) = match self.axes {
            Axes::Linear => (self.t_min, self.t_max),
            Axes::LogLog => (self.t_min.exp(), self.t_max.exp()),
        };
        if self.axes == Axes::LogLog {
            let d_lo = lo.log10().ceil() as i32;
            let d_hi = hi.log10().floor() as i32;
            if d_hi - d_lo >= 1 {
                return (d_lo..=d_hi).map(|d| 10f64.powi(d)).collect();
            }
        }
        nice_ticks(lo, hi)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw_step = span / 5.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let residual = raw_step / magnitude;
    let step = magnitude
        * if residual <= 1.0 {
            1.0
        } else if residual <= 2.0 {
            2.0
        } else if residual <= 5.0 {
            5.0
        } else {
            10.0
        };
    let mut ticks = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + step * 1e-9 {
        // Snap near-zero artifacts of the multiplication.
        ticks.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    ticks
}

fn fmt_px(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_value(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn validate(spec: &ChartSpec) -> Result<(), ChartError> {
    if spec.series.is_empty() {
        return Err(ChartError::NoSeries);
    }
    for series in &spec.series {
        if series.points.is_empty() {
            return Err(ChartError::EmptySeries { label: series.label.clone() });
        }
        for (index, p) in series.points.iter().enumerate() {
            if !p.budget.is_finite() || !p.error.is_finite() {
                return Err(ChartError::NonFinite { label: series.label.clone(), index });
            }
            if spec.axes == Axes::LogLog && (p.budget <= 0.0 || p.error <= 0.0) {
                return Err(ChartError::NonPositiveValue { label: series.label.clone(), index });
            }
        }
    }
    if !spec.fits.is_empty()
        && spec.series.iter().flat_map(|s| &s.points).any(|p| p.budget <= 0.0)
    {
        return Err(ChartError::FitsNeedPositiveBudgets);
    }
    Ok(())
}

/// Renders the chart as a standalone SVG document.
pub fn render_chart(spec: &ChartSpec) -> Result<String, ChartError> {
    validate(spec)?;

    let points = || spec.series.iter().flat_map(|s| s.points.iter());
    let x_min_data = points().map(|p| p.budget).fold(f64::INFINITY, f64::min);
    let x_max_data = points().map(|p| p.budget).fold(f64::NEG_INFINITY, f64::max);

    // Sample fit curves across the data range up front so the y scale can
    // accommodate them.
    let mut fit_paths: Vec<Vec<(f64, f64)>> = Vec::new();
    for labeled in &spec.fits {
        let f = &labeled.fit;
        let mut path = Vec::with_capacity(FIT_SAMPLES);
        for i in 0..FIT_SAMPLES {
            let frac = i as f64 / (FIT_SAMPLES - 1) as f64;
            let x = if x_max_data > x_min_data {
                match spec.axes {
                    Axes::Linear => x_min_data + frac * (x_max_data - x_min_data),
                    Axes::LogLog => x_min_data * (x_max_data / x_min_data).powf(frac),
                }
            } else {
                x_min_data
            };
            let y = f.l_infinity + f.beta * x.powf(f.alpha);
            if y.is_finite() && (spec.axes == Axes::Linear || y > 0.0) {
                path.push((x, y));
            }
        }
        fit_paths.push(path);
    }

    let x_scale = Scale::new(
        spec.axes,
        points().map(|p| p.budget),
        MARGIN_LEFT,
        WIDTH - MARGIN_RIGHT,
    );
    let y_values = points()
        .map(|p| p.error)
        .chain(fit_paths.iter().flatten().map(|&(_, y)| y));
    // Screen y grows downward, so swap the pixel endpoints.
    let y_scale = Scale::new(spec.axes, y_values, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="Menlo, Consolas, monospace" font-size="13">"#,
        w = WIDTH as u32,
        h = HEIGHT as u32
    );
    let _ = writeln!(svg, r##"<rect width="{}" height="{}" fill="#ffffff"/>"##, WIDTH as u32, HEIGHT as u32);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="17">{}</text>"#,
        fmt_px((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        escape(&spec.title)
    );

    let plot_w = WIDTH - MARGIN_RIGHT - MARGIN_LEFT;
    let plot_h = HEIGHT - MARGIN_BOTTOM - MARGIN_TOP;
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333"/>"##,
        fmt_px(MARGIN_LEFT),
        fmt_px(MARGIN_TOP),
        fmt_px(plot_w),
        fmt_px(plot_h)
    );

    // Gridlines, ticks, tick labels.
    for tick in x_scale.ticks() {
        let px = x_scale.to_px(tick);
        if px < MARGIN_LEFT - 0.01 || px > WIDTH - MARGIN_RIGHT + 0.01 {
            continue;
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#dddddd"/>"##,
            fmt_px(MARGIN_TOP),
            fmt_px(HEIGHT - MARGIN_BOTTOM),
            x = fmt_px(px)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333333"/>"##,
            fmt_px(HEIGHT - MARGIN_BOTTOM),
            fmt_px(HEIGHT - MARGIN_BOTTOM + 5.0),
            x = fmt_px(px)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt_px(px),
            fmt_px(HEIGHT - MARGIN_BOTTOM + 20.0),
            fmt_value(tick)
        );
    }
    for tick in y_scale.ticks() {
        let py = y_scale.to_px(tick);
        if py < MARGIN_TOP - 0.01 || py > HEIGHT - MARGIN_BOTTOM + 0.01 {
            continue;
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##,
            fmt_px(MARGIN_LEFT),
            fmt_px(WIDTH - MARGIN_RIGHT),
            y = fmt_px(py)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#333333"/>"##,
            fmt_px(MARGIN_LEFT - 5.0),
            fmt_px(MARGIN_LEFT),
            y = fmt_px(py)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt_px(MARGIN_LEFT - 9.0),
            fmt_px(py + 4.0),
            fmt_value(tick)
        );
    }

    // Axis titles.
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt_px((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        fmt_px(HEIGHT - 18.0),
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="22" y="{mid}" text-anchor="middle" transform="rotate(-90 22 {mid})">{}</text>"#,
        escape(&spec.y_label),
        mid = fmt_px((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0)
    );

    // Fit curves under the markers.
    for (j, (labeled, path)) in spec.fits.iter().zip(&fit_paths).enumerate() {
        let color = PALETTE[(spec.series.len() + j) % PALETTE.len()];
        let mut d = String::new();
        for (k, &(x, y)) in path.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{}{} {} ", cmd, fmt_px(x_scale.to_px(x)), fmt_px(y_scale.to_px(y)));
        }
        let _ = writeln!(
            svg,
            r#"<path class="fit" fill="none" stroke="{}" stroke-width="1.8" stroke-dasharray="7 4" d="{}"><title>{}</title></path>"#,
            color,
            d.trim_end(),
            escape(&labeled.label)
        );
    }

    // Markers. Exactly one circle element per sample point.
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for p in &series.points {
            let _ = writeln!(
                svg,
                r##"<circle class="marker" cx="{}" cy="{}" r="4" fill="{}" stroke="#ffffff"/>"##,
                fmt_px(x_scale.to_px(p.budget)),
                fmt_px(y_scale.to_px(p.error)),
                color
            );
        }
    }

    // Legend.
    let legend_x = WIDTH - MARGIN_RIGHT + 18.0;
    let mut legend_y = MARGIN_TOP + 10.0;
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            fmt_px(legend_x),
            fmt_px(legend_y - 10.0),
            color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            fmt_px(legend_x + 18.0),
            fmt_px(legend_y),
            escape(&series.label)
        );
        legend_y += 22.0;
    }
    for (j, labeled) in spec.fits.iter().enumerate() {
        let color = PALETTE[(spec.series.len() + j) % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="1.8" stroke-dasharray="7 4"/>"#,
            fmt_px(legend_x),
            fmt_px(legend_x + 14.0),
            color,
            y = fmt_px(legend_y - 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            fmt_px(legend_x + 18.0),
            fmt_px(legend_y),
            escape(&labeled.label)
        );
        legend_y += 22.0;
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_power_law, FitMethod};

    fn sample_spec() -> ChartSpec {
        let points = vec![
            SamplePoint::new(476.70, 9.32),
            SamplePoint::new(653.54, 8.63),
            SamplePoint::new(830.37, 8.35),
            SamplePoint::new(948.26, 8.23),
        ];
        let fit = fit_power_law(&points, FitMethod::LogLogOls).unwrap();
        let mut spec = ChartSpec::new("scaling curve", Axes::LogLog);
        spec.series.push(Series { label: "S5-preliminary".into(), points });
        spec.fits.push(LabeledFit { label: "power-law fit".into(), fit });
        spec
    }

    #[test]
    fn one_marker_per_point_and_one_path_per_fit() {
        let svg = render_chart(&sample_spec()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches(r#"class="fit""#).count(), 1);
        assert!(svg.contains("<svg "));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn identical_specs_render_byte_identical_svg() {
        let spec = sample_spec();
        assert_eq!(render_chart(&spec).unwrap(), render_chart(&spec).unwrap());
        let again = spec.clone();
        assert_eq!(render_chart(&spec).unwrap(), render_chart(&again).unwrap());
    }

    #[test]
    fn validation_errors() {
        let empty = ChartSpec::new("empty", Axes::Linear);
        assert_eq!(render_chart(&empty).unwrap_err(), ChartError::NoSeries);

        let mut no_points = ChartSpec::new("x", Axes::Linear);
        no_points.series.push(Series { label: "a".into(), points: vec![] });
        assert!(matches!(render_chart(&no_points).unwrap_err(), ChartError::EmptySeries { .. }));

        let mut negative = ChartSpec::new("x", Axes::LogLog);
        negative.series.push(Series {
            label: "a".into(),
            points: vec![SamplePoint::new(10.0, 5.0), SamplePoint::new(20.0, -1.0)],
        });
        assert!(matches!(
            render_chart(&negative).unwrap_err(),
            ChartError::NonPositiveValue { index: 1, .. }
        ));
    }

    #[test]
    fn linear_axes_accept_the_same_data() {
        let mut spec = sample_spec();
        spec.axes = Axes::Linear;
        let svg = render_chart(&spec).unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn fit_path_samples_span_the_data_range() {
        let svg = render_chart(&sample_spec()).unwrap();
        let d_start = svg.find(" d=\"M").unwrap();
        let d = &svg[d_start + 4..svg[d_start..].find("\">").unwrap() + d_start];
        // 200 samples: one M plus 199 L commands.
        assert_eq!(d.matches('L').count(), 199);
    }

    #[test]
    fn single_point_series_renders_without_degenerate_scales() {
        let mut spec = ChartSpec::new("single", Axes::Linear);
        spec.series.push(Series { label: "one".into(), points: vec![SamplePoint::new(10.0, 5.0)] });
        let svg = render_chart(&spec).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn titles_and_labels_are_escaped() {
        let mut spec = ChartSpec::new("a < b & c", Axes::Linear);
        spec.series.push(Series {
            label: "x<y".into(),
            points: vec![SamplePoint::new(1.0, 2.0), SamplePoint::new(2.0, 3.0)],
        });
        let svg = render_chart(&spec).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("x&lt;y"));
    }

    #[test]
    fn published_points_sit_within_two_percent_of_the_published_curve() {
        // Reference rows next to the curve they were published with: every
        // marker must stay close enough to the fit line that the rendered
        // figure reads as a single trend.
        let points: Vec<SamplePoint> = crate::load_fixtures(3)
            .unwrap()
            .into_iter()
            .filter(|r| r.strategy_id == "S5-preliminary")
            .map(|r| SamplePoint::new(r.total_flops, r.avg_cer().unwrap()))
            .collect();
        assert_eq!(points.len(), 4);
        let curve = PowerLawFit {
            alpha: -0.18,
            beta: 28.24,
            l_infinity: 0.0,
            method: FitMethod::LogLogOls,
            r2_log: 1.0,
            r2_linear: 1.0,
            n_points: 0,
            degenerate: false,
        };
        let mut spec = ChartSpec::new("scaling curve", Axes::LogLog);
        spec.series.push(Series { label: "S5-preliminary".into(), points: points.clone() });
        spec.fits.push(LabeledFit { label: "published curve".into(), fit: curve.clone() });
        let svg = render_chart(&spec).unwrap();
        assert_eq!(svg.matches(r#"class="marker""#).count(), 4);

        for p in &points {
            let on_curve = crate::fit::predict_error(&curve, p.budget).unwrap();
            let vertical = (on_curve - p.error).abs() / p.error;
            assert!(vertical <= 0.02, "point at {} is {vertical:.4} off the curve", p.budget);
        }
    }
}
