//! Standalone SVG figures: line plots and trajectories over a density heat map.
//!
//! Coordinates are printed with fixed precision so identical data give
//! identical files.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    #[default]
    Lines,
    Markers,
    LinesAndMarkers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }

    pub fn from_xy(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Self::new(label, x.iter().copied().zip(y.iter().copied()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub style: Style,
}

impl Figure {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), style: Style::Lines }
    }

    pub fn style(mut self, style: Style) -> Self {
        self.style = style;
        self
    }
}

/// `rho(x, t)` sampled at `times` x `coords`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatStrip {
    pub times: Vec<f64>,
    pub coords: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi - lo > 0.0 {
                (lo, hi)
            } else {
                let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
                (lo - d, hi + d)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Five evenly spaced tick values.
fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    (0..5).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.into() }
    }
}

fn header(out: &mut String, fig: &Figure) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (LEFT + W - RIGHT) / 2.0,
        escape(&fig.title)
    );
}

fn axes(out: &mut String, fig: &Figure, f: &Frame) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    for v in ticks(f.x) {
        let x = f.px(v);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{x:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y1 + 5.0,
            y1 + 19.0,
            tick_label(v)
        );
    }
    for v in ticks(f.y) {
        let y = f.py(v);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 15.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&fig.y_label)
    );
}

fn legend(out: &mut String, labels: &[(String, &str)]) {
    for (k, (label, color)) in labels.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * k as f64;
        let x = W - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{:.1}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// One or more `(x, y)` series on shared axes with a legend.
pub fn line_plot(fig: &Figure, series: &[Series]) -> Result<String, PlotError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::Empty("series"));
    }
    if series.iter().flat_map(|s| &s.points).any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(PlotError::NonFinite("series"));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let f = Frame::new(range(all().map(|p| p.0)), range(all().map(|p| p.1)));
    let mut out = String::new();
    header(&mut out, fig);
    axes(&mut out, fig, &f);
    let mut labels = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if s.points.is_empty() {
            continue;
        }
        if fig.style != Style::Markers {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                pts.join(" ")
            );
        }
        if fig.style != Style::Lines {
            for &(x, y) in &s.points {
                let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>", f.px(x), f.py(y));
            }
        }
        labels.push((s.label.clone(), color));
    }
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    Ok(out)
}

/// White-to-blue ramp.
fn heat(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - 0.85 * v)).round() as u8;
    let g = (255.0 * (1.0 - 0.6 * v)).round() as u8;
    format!("#{r:02x}{g:02x}ff")
}

/// Paths `(t, x)` drawn over the density `rho(x, t)` as a heat map.
pub fn trajectory_plot(fig: &Figure, strip: &HeatStrip, paths: &[Vec<(f64, f64)>]) -> Result<String, PlotError> {
    if strip.times.is_empty() || strip.coords.is_empty() || strip.values.len() != strip.times.len() {
        return Err(PlotError::Empty("heat strip"));
    }
    if paths.iter().all(|p| p.is_empty()) {
        return Err(PlotError::Empty("paths"));
    }
    if strip.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PlotError::NonFinite("heat strip"));
    }
    let t_range = range(strip.times.iter().copied());
    let x_range = range(strip.coords.iter().copied());
    let f = Frame::new(t_range, x_range);
    let peak = strip.values.iter().flatten().fold(0.0f64, |a, &b| a.max(b)).max(f64::MIN_POSITIVE);
    let mut out = String::new();
    header(&mut out, fig);
    let nt = strip.times.len();
    // Each snapshot fills the span to the next one; spatial cells are merged
    // into at most 100 rows.
    let rows = strip.coords.len().min(100);
    let per_row = strip.coords.len().div_ceil(rows);
    for (k, col) in strip.values.iter().enumerate() {
        let t0 = strip.times[k];
        let t1 = if k + 1 < nt { strip.times[k + 1] } else { t0 + (f.x.1 - f.x.0) / (nt.max(2) as f64 * 4.0) };
        let (px0, px1) = (f.px(t0), f.px(t1.min(f.x.1)));
        for chunk in (0..strip.coords.len()).step_by(per_row) {
            let end = (chunk + per_row).min(strip.coords.len());
            let v = col[chunk..end].iter().sum::<f64>() / (end - chunk) as f64 / peak;
            if v < 0.01 {
                continue;
            }
            let (ya, yb) = (f.py(strip.coords[chunk]), f.py(strip.coords[end - 1]));
            let h = (ya - yb).abs() + (H - TOP - BOTTOM) / strip.coords.len() as f64 * 1.0;
            let _ = writeln!(
                out,
                "<rect x=\"{px0:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
                ya.min(yb) - 0.5 * (H - TOP - BOTTOM) / strip.coords.len() as f64,
                (px1 - px0).max(0.5),
                heat(v)
            );
        }
    }
    for path in paths.iter().filter(|p| !p.is_empty()) {
        // break the line where a periodic coordinate wraps
        let span = x_range.1 - x_range.0;
        let mut seg: Vec<String> = Vec::new();
        let mut prev: Option<f64> = None;
        let flush = |seg: &mut Vec<String>, out: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"#222222\" stroke-opacity=\"0.7\" stroke-width=\"0.8\" points=\"{}\"/>",
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(t, x) in path {
            if prev.is_some_and(|p| (x - p).abs() > 0.5 * span) {
                flush(&mut seg, &mut out);
            }
            seg.push(format!("{:.2},{:.2}", f.px(t), f.py(x)));
            prev = Some(x);
        }
        flush(&mut seg, &mut out);
    }
    axes(&mut out, fig, &f);
    legend(&mut out, &[("trajectories".to_string(), "#222222"), ("density".to_string(), "#2666ff")]);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_is_an_error() {
        let fig = Figure::new("t", "x", "y");
        assert_eq!(line_plot(&fig, &[]), Err(PlotError::Empty("series")));
        assert!(line_plot(&fig, &[Series::new("a", vec![])]).is_err());
        let strip = HeatStrip { times: vec![], coords: vec![], values: vec![] };
        assert!(trajectory_plot(&fig, &strip, &[vec![(0.0, 0.0)]]).is_err());
    }

    #[test]
    fn line_plot_has_axes_and_legend() {
        let fig = Figure::new("H(t)", "t", "H").style(Style::LinesAndMarkers);
        let s = line_plot(&fig, &[Series::new("run <1>", vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.2)])]).unwrap();
        assert!(s.starts_with("<svg"));
        assert!(s.contains("<polyline") && s.contains("<circle"));
        assert!(s.contains("run &lt;1&gt;"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s, line_plot(&fig, &[Series::new("run <1>", vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.2)])]).unwrap());
    }

    #[test]
    fn constant_series_still_plots() {
        let fig = Figure::new("flat", "x", "y");
        assert!(line_plot(&fig, &[Series::new("c", vec![(1.0, 2.0), (1.0, 2.0)])]).is_ok());
        assert!(line_plot(&fig, &[Series::new("c", vec![(1.0, f64::NAN)])]).is_err());
    }

    #[test]
    fn trajectories_over_heat() {
        let strip = HeatStrip {
            times: vec![0.0, 1.0],
            coords: vec![-1.0, 0.0, 1.0],
            values: vec![vec![0.1, 1.0, 0.1], vec![0.2, 0.8, 0.2]],
        };
        let fig = Figure::new("paths", "t", "x");
        let s = trajectory_plot(&fig, &strip, &[vec![(0.0, 0.0), (0.5, 0.9), (1.0, -0.9)]]).unwrap();
        assert!(s.contains("<rect") && s.contains("<polyline"));
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
    }
}
