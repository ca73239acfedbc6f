//! Standalone SVG figures: AGP comparison plots and outcomes over time.
//!
//! Output is byte-deterministic. Coordinates are printed with two decimals
//! and every element is written in a fixed order.

use std::fmt::Write as _;

use thiserror::Error;

use crate::metrics::{AgpProfile, GlycemicReport, Metric, MetricUnit};
use crate::timeparse::format_local_date;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlotError {
    #[error("profiles use different bin widths ({0} vs {1} min)")]
    BinMismatch(u32, u32),
    #[error("profile has no data")]
    EmptyProfile,
    #[error("expected 1 or 2 profiles, got {0}")]
    ProfileCount(usize),
    #[error("no reports to plot")]
    EmptySeries,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("selected metrics span more than two unit kinds")]
    TooManyUnits,
    #[error("bad style: {0}")]
    BadStyle(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesColors {
    pub median: String,
    pub inner: String,
    pub outer: String,
}

impl SeriesColors {
    fn new(median: &str, inner: &str, outer: &str) -> Self {
        SeriesColors {
            median: median.into(),
            inner: inner.into(),
            outer: outer.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: u32,
    pub height: u32,
    pub target_lo: f64,
    pub target_hi: f64,
    /// Top of the glucose axis in mg/dL.
    pub y_max: f64,
    /// Colors for the first and second profile.
    pub palette: [SeriesColors; 2],
    /// Line colors for outcome metrics, cycled.
    pub metric_colors: Vec<String>,
    pub labels: Vec<String>,
    pub title: Option<String>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            width: 800,
            height: 400,
            target_lo: 70.0,
            target_hi: 180.0,
            y_max: 400.0,
            palette: [
                SeriesColors::new("#1f4e79", "#6f9bc7", "#c5d7ea"),
                SeriesColors::new("#b8452a", "#e0876f", "#f3cfc4"),
            ],
            metric_colors: ["#1f4e79", "#b8452a", "#3a7d44", "#7b4ea3", "#c98a12", "#555555"]
                .map(String::from)
                .to_vec(),
            labels: vec!["Period 1".into(), "Period 2".into()],
            title: None,
        }
    }
}

impl PlotStyle {
    fn check(&self) -> Result<(), PlotError> {
        if self.width < 200 || self.height < 150 {
            return Err(PlotError::BadStyle("width must be >= 200 and height >= 150".into()));
        }
        if !(self.target_lo < self.target_hi) || !(self.y_max > 0.0) {
            return Err(PlotError::BadStyle("need target_lo < target_hi and y_max > 0".into()));
        }
        Ok(())
    }
}

const LEFT: f64 = 60.0;
const RIGHT: f64 = 60.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 45.0;

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Plot area in pixel space.
struct Frame {
    w: f64,
    h: f64,
}

impl Frame {
    fn new(style: &PlotStyle) -> Self {
        Frame {
            w: f64::from(style.width),
            h: f64::from(style.height),
        }
    }

    fn x0(&self) -> f64 {
        LEFT
    }

    fn x1(&self) -> f64 {
        self.w - RIGHT
    }

    fn y0(&self) -> f64 {
        self.h - BOTTOM
    }

    fn y1(&self) -> f64 {
        TOP
    }

    /// Maps `frac` in [0, 1] across the plot width.
    fn x(&self, frac: f64) -> f64 {
        self.x0() + frac.clamp(0.0, 1.0) * (self.x1() - self.x0())
    }

    fn y(&self, v: f64, lo: f64, hi: f64) -> f64 {
        let frac = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        self.y0() - frac * (self.y0() - self.y1())
    }

    fn header(&self, out: &mut String, title: Option<&str>) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = self.w,
            h = self.h
        );
        let _ = writeln!(out, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, self.w, self.h);
        if let Some(t) = title {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
                num(self.w / 2.0),
                escape(t)
            );
        }
    }

    fn box_outline(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r##"<rect class="plot-area" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333"/>"##,
            num(self.x0()),
            num(self.y1()),
            num(self.x1() - self.x0()),
            num(self.y0() - self.y1())
        );
    }
}

/// Maximal runs of consecutive indices for which `present` holds.
fn runs(n: usize, present: impl Fn(usize) -> bool) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for i in 0..=n {
        let here = i < n && present(i);
        match (here, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn band_path(frame: &Frame, style: &PlotStyle, lo: &[Option<f64>], hi: &[Option<f64>], x_of: &dyn Fn(usize) -> f64) -> String {
    let mut d = String::new();
    for run in runs(lo.len(), |i| lo[i].is_some() && hi[i].is_some()) {
        let y = |v: Option<f64>| num(frame.y(v.expect("in run"), 0.0, style.y_max));
        for (j, i) in run.clone().enumerate() {
            let _ = write!(d, "{}{} {} ", if j == 0 { "M" } else { "L" }, num(x_of(i)), y(hi[i]));
        }
        for i in run.rev() {
            let _ = write!(d, "L{} {} ", num(x_of(i)), y(lo[i]));
        }
        d.push_str("Z ");
    }
    d.trim_end().to_owned()
}

fn polyline_points(pts: impl Iterator<Item = (f64, f64)>) -> String {
    pts.map(|(x, y)| format!("{},{}", num(x), num(y))).collect::<Vec<_>>().join(" ")
}

fn legend(out: &mut String, frame: &Frame, entries: &[(String, String)]) {
    let _ = writeln!(out, r#"<g class="legend">"#);
    let mut x = frame.x0();
    for (label, color) in entries {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            num(x),
            num(frame.y1() - 18.0 + 2.0),
            escape(color)
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, num(x + 16.0), num(frame.y1() - 6.0), escape(label));
        x += 24.0 + 7.0 * label.chars().count() as f64;
    }
    let _ = writeln!(out, "</g>");
}

/// AGP figure for one profile, or two overlaid profiles with a legend.
pub fn render_agp(profiles: &[&AgpProfile], style: &PlotStyle) -> Result<String, PlotError> {
    style.check()?;
    if profiles.is_empty() || profiles.len() > 2 {
        return Err(PlotError::ProfileCount(profiles.len()));
    }
    let bin = profiles[0].bin_minutes;
    for p in profiles {
        if p.bin_minutes != bin {
            return Err(PlotError::BinMismatch(bin, p.bin_minutes));
        }
        if p.n_bins() == 0 || p.p50.iter().all(Option::is_none) {
            return Err(PlotError::EmptyProfile);
        }
    }
    let frame = Frame::new(style);
    let mut out = String::new();
    frame.header(&mut out, style.title.as_deref());

    // time-of-day axis
    for h in (0..=24).step_by(3) {
        let x = frame.x(f64::from(h) / 24.0);
        let _ = writeln!(
            out,
            r##"<line class="tick" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#dddddd"/>"##,
            num(frame.y1()),
            num(frame.y0()),
            x = num(x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{:02}:00</text>"#,
            num(x),
            num(frame.y0() + 16.0),
            h
        );
    }
    let mut v = 0.0;
    while v <= style.y_max {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(frame.x0() - 6.0),
            num(frame.y(v, 0.0, style.y_max) + 4.0),
            v
        );
        v += 50.0;
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">Glucose (mg/dL)</text>"#,
        num((frame.y0() + frame.y1()) / 2.0),
        num((frame.y0() + frame.y1()) / 2.0)
    );

    let n = profiles[0].n_bins();
    let x_of = |i: usize| frame.x((i as f64 + 0.5) / n as f64);
    for (p, colors) in profiles.iter().zip(&style.palette) {
        let _ = writeln!(
            out,
            r#"<path class="band-outer" d="{}" fill="{}" fill-opacity="0.6" stroke="none"/>"#,
            band_path(&frame, style, &p.p5, &p.p95, &x_of),
            escape(&colors.outer)
        );
        let _ = writeln!(
            out,
            r#"<path class="band-inner" d="{}" fill="{}" fill-opacity="0.7" stroke="none"/>"#,
            band_path(&frame, style, &p.p25, &p.p75, &x_of),
            escape(&colors.inner)
        );
    }
    for (p, colors) in profiles.iter().zip(&style.palette) {
        for run in runs(n, |i| p.p50[i].is_some()) {
            let pts = run.map(|i| (x_of(i), frame.y(p.p50[i].expect("in run"), 0.0, style.y_max)));
            let _ = writeln!(
                out,
                r#"<polyline class="median" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                polyline_points(pts),
                escape(&colors.median)
            );
        }
    }
    for target in [style.target_lo, style.target_hi] {
        let y = num(frame.y(target, 0.0, style.y_max));
        let _ = writeln!(
            out,
            r##"<line class="target" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#3a7d44" stroke-dasharray="6 4"/>"##,
            num(frame.x0()),
            num(frame.x1())
        );
    }
    frame.box_outline(&mut out);
    if profiles.len() == 2 {
        let entries: Vec<(String, String)> = (0..2)
            .map(|i| {
                let label = style.labels.get(i).cloned().unwrap_or_else(|| format!("Period {}", i + 1));
                (label, style.palette[i].median.clone())
            })
            .collect();
        legend(&mut out, &frame, &entries);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Parses a comma list such as `tir,cv` into metrics.
pub fn parse_metrics(list: &str) -> Result<Vec<Metric>, PlotError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Metric>().map_err(|_| PlotError::UnknownMetric(s.to_owned())))
        .collect()
}

fn unit_label(unit: MetricUnit) -> &'static str {
    match unit {
        MetricUnit::Percent => "%",
        MetricUnit::MgDl => "mg/dL",
        MetricUnit::GmiPercent => "GMI %",
        MetricUnit::Count => "samples",
    }
}

fn nice_ceiling(v: f64, step: f64) -> f64 {
    ((v / step).ceil() * step).max(step)
}

fn axis_range(unit: MetricUnit, values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    match unit {
        MetricUnit::Percent => (0.0, 100.0),
        MetricUnit::MgDl => (0.0, nice_ceiling(hi.max(0.0), 50.0)),
        MetricUnit::Count => (0.0, nice_ceiling(hi.max(0.0), 10.0)),
        MetricUnit::GmiPercent => {
            if lo.is_finite() {
                (lo.floor().min(5.0), hi.ceil().max(10.0))
            } else {
                (5.0, 10.0)
            }
        }
    }
}

/// Metric values per window against window start dates. Each metric is one
/// polyline per run of non-MISSING windows.
pub fn render_outcomes(series: &[GlycemicReport], metrics: &[Metric], style: &PlotStyle) -> Result<String, PlotError> {
    style.check()?;
    if series.is_empty() {
        return Err(PlotError::EmptySeries);
    }
    if metrics.is_empty() {
        return Err(PlotError::UnknownMetric(String::new()));
    }
    let mut units: Vec<MetricUnit> = Vec::new();
    for m in metrics {
        if !units.contains(&m.unit()) {
            units.push(m.unit());
        }
    }
    if units.len() > 2 {
        return Err(PlotError::TooManyUnits);
    }
    let ranges: Vec<(f64, f64)> = units
        .iter()
        .map(|&u| {
            axis_range(
                u,
                metrics
                    .iter()
                    .filter(|m| m.unit() == u)
                    .flat_map(|&m| series.iter().filter_map(move |r| r.get(m))),
            )
        })
        .collect();

    let frame = Frame::new(style);
    let mut out = String::new();
    frame.header(&mut out, style.title.as_deref());

    let starts: Vec<i64> = series.iter().map(|r| r.window.start.epoch_millis()).collect();
    let (t_min, t_max) = (starts[0].min(*starts.last().unwrap()), starts.iter().copied().max().unwrap());
    let x_of = |i: usize| {
        if t_max == t_min {
            frame.x(0.5)
        } else {
            frame.x((starts[i] - t_min) as f64 / (t_max - t_min) as f64)
        }
    };

    let label_every = series.len().div_ceil(10).max(1);
    for i in (0..series.len()).step_by(label_every) {
        let x = num(x_of(i));
        let _ = writeln!(
            out,
            r##"<line class="tick" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#dddddd"/>"##,
            num(frame.y1()),
            num(frame.y0())
        );
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            num(frame.y0() + 16.0),
            format_local_date(&series[i].window.start)
        );
    }
    for (side, (&unit, &(lo, hi))) in units.iter().zip(&ranges).enumerate() {
        let (x, anchor) = if side == 0 {
            (frame.x0() - 6.0, "end")
        } else {
            (frame.x1() + 6.0, "start")
        };
        for k in 0..=4 {
            let v = lo + (hi - lo) * f64::from(k) / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
                num(x),
                num(frame.y(v, lo, hi) + 4.0),
                num(v).trim_end_matches('0').trim_end_matches('.')
            );
        }
        let lx = if side == 0 { 14.0 } else { frame.w - 14.0 };
        let ly = num((frame.y0() + frame.y1()) / 2.0);
        let _ = writeln!(
            out,
            r#"<text class="axis-label" x="{lx}" y="{ly}" text-anchor="middle" transform="rotate(-90 {lx} {ly})">{}</text>"#,
            escape(unit_label(unit))
        );
    }

    let mut entries = Vec::new();
    for (mi, &m) in metrics.iter().enumerate() {
        let color = style.metric_colors[mi % style.metric_colors.len().max(1)].clone();
        let axis = units.iter().position(|&u| u == m.unit()).expect("unit collected");
        let (lo, hi) = ranges[axis];
        for run in runs(series.len(), |i| series[i].get(m).is_some()) {
            if run.len() == 1 {
                let i = run.start;
                let _ = writeln!(
                    out,
                    r#"<circle class="point" data-metric="{m}" cx="{}" cy="{}" r="2.5" fill="{}"/>"#,
                    num(x_of(i)),
                    num(frame.y(series[i].get(m).expect("in run"), lo, hi)),
                    escape(&color)
                );
                continue;
            }
            let pts = run.map(|i| (x_of(i), frame.y(series[i].get(m).expect("in run"), lo, hi)));
            let _ = writeln!(
                out,
                r#"<polyline class="metric" data-metric="{m}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                polyline_points(pts),
                escape(&color)
            );
        }
        entries.push((m.name().to_owned(), color));
    }
    frame.box_outline(&mut out);
    legend(&mut out, &frame, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}
