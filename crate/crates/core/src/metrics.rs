//! Windowed glycemic metrics, AGP percentile profiles and cohort summaries.
//!
//! All range percentages count samples by default. Time below range and time
//! above range are cumulative (`tbr_low` includes the very-low band and
//! `tar_high` includes the very-high band), so `tbr_low + tir + tar_high`
//! is always 100.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Signal, SubjectRecord, Values};
use crate::timeparse::{format_timestamp, TimedInstant};

const DAY_MS: i64 = 86_400_000;
const DEFAULT_NOMINAL_SECONDS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("record has no cgm samples")]
    EmptySignal,
    #[error("no samples in window {0}")]
    NoData(String),
    #[error("cgm signal is not numeric")]
    NotNumeric,
    #[error("thresholds must satisfy very_low < low < high < very_high")]
    BadThresholds,
    #[error("bad window: {0}")]
    BadWindow(String),
    #[error("bin width {0} min does not divide a day")]
    BadBin(u32),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Glucose thresholds in mg/dL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeThresholds {
    pub very_low: f64,
    pub low: f64,
    pub high: f64,
    pub very_high: f64,
}

impl Default for RangeThresholds {
    fn default() -> Self {
        RangeThresholds {
            very_low: 54.0,
            low: 70.0,
            high: 180.0,
            very_high: 250.0,
        }
    }
}

impl RangeThresholds {
    pub fn check(&self) -> Result<(), MetricsError> {
        if self.very_low < self.low && self.low < self.high && self.high < self.very_high {
            Ok(())
        } else {
            Err(MetricsError::BadThresholds)
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RangeThresholds {
            very_low: self.very_low * factor,
            low: self.low * factor,
            high: self.high * factor,
            very_high: self.very_high * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSpec {
    ByDay,
    ByWeek,
    Custom { start: TimedInstant, end: TimedInstant },
    Rolling { length_seconds: i64, stride_seconds: i64 },
}

/// Half-open analysis window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: TimedInstant,
    pub end: TimedInstant,
    /// Data does not cover the whole window.
    pub partial: bool,
}

impl Window {
    pub fn new(start: TimedInstant, end: TimedInstant) -> Result<Window, MetricsError> {
        if start.epoch_millis() >= end.epoch_millis() {
            return Err(MetricsError::BadWindow(format!("{start} is not before {end}")));
        }
        Ok(Window {
            start,
            end,
            partial: false,
        })
    }

    pub fn length_seconds(&self) -> f64 {
        (self.end.epoch_millis() - self.start.epoch_millis()) as f64 / 1000.0
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Cgm samples sorted by instant.
struct Series<'a> {
    times: Cow<'a, [TimedInstant]>,
    millis: Vec<i64>,
    values: Cow<'a, [f64]>,
}

impl<'a> Series<'a> {
    fn new(signal: &'a Signal) -> Result<Self, MetricsError> {
        let Values::Numeric(values) = &signal.values else {
            return Err(MetricsError::NotNumeric);
        };
        let (times, values): (Cow<[TimedInstant]>, Cow<[f64]>) = if signal.is_sorted() {
            (signal.times.as_slice().into(), values.as_slice().into())
        } else {
            let sorted = signal.clone().sorted();
            let Values::Numeric(v) = sorted.values else { unreachable!() };
            (sorted.times.into(), v.into())
        };
        let millis = times.iter().map(TimedInstant::epoch_millis).collect();
        Ok(Series { times, millis, values })
    }

    fn range(&self, w: &Window) -> std::ops::Range<usize> {
        let a = self.millis.partition_point(|&t| t < w.start.epoch_millis());
        let b = self.millis.partition_point(|&t| t < w.end.epoch_millis());
        a..b
    }

    fn nominal_period(&self) -> Option<f64> {
        let mut gaps: Vec<i64> = self.millis.windows(2).map(|w| w[1] - w[0]).filter(|&g| g > 0).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_unstable();
        let n = gaps.len();
        let median = if n % 2 == 1 {
            gaps[n / 2] as f64
        } else {
            (gaps[n / 2 - 1] + gaps[n / 2]) as f64 / 2.0
        };
        Some(median / 1000.0)
    }

    fn is_partial(&self, w: &Window, period_ms: f64) -> bool {
        let r = self.range(w);
        if r.is_empty() {
            return true;
        }
        let first = self.millis[r.start] as f64;
        let last = self.millis[r.end - 1] as f64;
        first > w.start.epoch_millis() as f64 + period_ms || last < w.end.epoch_millis() as f64 - period_ms
    }
}

/// Median positive gap between consecutive samples, in seconds.
pub fn nominal_period(cgm: &Signal) -> Result<Option<f64>, MetricsError> {
    Ok(Series::new(cgm)?.nominal_period())
}

fn cgm_of(record: &SubjectRecord) -> Result<&Signal, MetricsError> {
    match record.cgm() {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(MetricsError::EmptySignal),
    }
}

fn local_midnight(t: TimedInstant) -> TimedInstant {
    let local = t.local_millis();
    let shift = local.rem_euclid(DAY_MS);
    t.add_millis(-shift)
}

fn slice_series(series: &Series, spec: &WindowSpec) -> Result<Vec<Window>, MetricsError> {
    let first = *series.times.first().ok_or(MetricsError::EmptySignal)?;
    let last_ms = *series.millis.last().expect("non-empty");
    let blocks = |len_ms: i64| {
        let anchor = local_midnight(first);
        let n = (last_ms - anchor.epoch_millis()) / len_ms + 1;
        (0..n)
            .map(|i| (anchor.add_millis(i * len_ms), anchor.add_millis((i + 1) * len_ms)))
            .collect::<Vec<_>>()
    };
    let spans = match *spec {
        WindowSpec::ByDay => blocks(DAY_MS),
        WindowSpec::ByWeek => blocks(7 * DAY_MS),
        WindowSpec::Custom { start, end } => {
            Window::new(start, end)?;
            vec![(start, end)]
        }
        WindowSpec::Rolling {
            length_seconds,
            stride_seconds,
        } => {
            if length_seconds <= 0 || stride_seconds <= 0 {
                return Err(MetricsError::BadWindow("rolling length and stride must be positive".into()));
            }
            let (len, stride) = (length_seconds * 1000, stride_seconds * 1000);
            let n = (last_ms - first.epoch_millis()) / stride + 1;
            (0..n)
                .map(|i| (first.add_millis(i * stride), first.add_millis(i * stride + len)))
                .collect()
        }
    };
    let period_ms = series.nominal_period().unwrap_or(DEFAULT_NOMINAL_SECONDS) * 1000.0;
    Ok(spans
        .into_iter()
        .map(|(start, end)| {
            let mut w = Window {
                start,
                end,
                partial: false,
            };
            w.partial = series.is_partial(&w, period_ms);
            w
        })
        .collect())
}

/// Analysis windows over the record's cgm span. Day and week blocks start at
/// local midnight of the first sample, in that sample's offset.
pub fn slice_windows(record: &SubjectRecord, spec: &WindowSpec) -> Result<Vec<Window>, MetricsError> {
    slice_series(&Series::new(cgm_of(record)?)?, spec)
}

/// Whether range percentages count samples or weight each sample by the time
/// until the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    SampleCount,
    Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub thresholds: RangeThresholds,
    /// Wear-time sampling period; the median gap when `None`.
    pub nominal_period_seconds: Option<f64>,
    pub weighting: Weighting,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            thresholds: RangeThresholds::default(),
            nominal_period_seconds: None,
            weighting: Weighting::SampleCount,
        }
    }
}

/// Percentage of samples in the window with `lo <= v <= hi`.
pub fn time_in_range(cgm: &Signal, window: &Window, lo: f64, hi: f64) -> Result<f64, MetricsError> {
    if !(lo < hi) {
        return Err(MetricsError::BadThresholds);
    }
    let series = Series::new(cgm)?;
    let r = series.range(window);
    if r.is_empty() {
        return Err(MetricsError::NoData(window.to_string()));
    }
    let n = r.len();
    let inside = series.values[r].iter().filter(|&&v| lo <= v && v <= hi).count();
    Ok(100.0 * inside as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlycemicReport {
    pub window: Window,
    pub n_samples: usize,
    pub wear_time_pct: Option<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub cv_pct: Option<f64>,
    pub gmi_pct: Option<f64>,
    pub tir_pct: Option<f64>,
    pub tbr_low_pct: Option<f64>,
    pub tbr_very_low_pct: Option<f64>,
    pub tar_high_pct: Option<f64>,
    pub tar_very_high_pct: Option<f64>,
}

impl GlycemicReport {
    /// Report for a window without samples: every metric MISSING.
    pub fn placeholder(window: Window) -> Self {
        GlycemicReport {
            window,
            n_samples: 0,
            wear_time_pct: None,
            mean: None,
            sd: None,
            cv_pct: None,
            gmi_pct: None,
            tir_pct: None,
            tbr_low_pct: None,
            tbr_very_low_pct: None,
            tar_high_pct: None,
            tar_very_high_pct: None,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::NSamples => Some(self.n_samples as f64),
            Metric::WearTime => self.wear_time_pct,
            Metric::Mean => self.mean,
            Metric::Sd => self.sd,
            Metric::Cv => self.cv_pct,
            Metric::Gmi => self.gmi_pct,
            Metric::Tir => self.tir_pct,
            Metric::TbrLow => self.tbr_low_pct,
            Metric::TbrVeryLow => self.tbr_very_low_pct,
            Metric::TarHigh => self.tar_high_pct,
            Metric::TarVeryHigh => self.tar_very_high_pct,
        }
    }
}

pub fn gmi(mean_mg_dl: f64) -> f64 {
    3.31 + 0.02392 * mean_mg_dl
}

fn summarize(series: &Series, window: &Window, opts: &MetricOptions, period_s: f64) -> Result<GlycemicReport, MetricsError> {
    opts.thresholds.check()?;
    let r = series.range(window);
    if r.is_empty() {
        return Err(MetricsError::NoData(window.to_string()));
    }
    let values = &series.values[r.clone()];
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let cv = sd.filter(|_| mean > 0.0).map(|sd| 100.0 * sd / mean);

    let weights: Vec<f64> = match opts.weighting {
        Weighting::SampleCount => vec![1.0; n],
        Weighting::Duration => {
            let end = window.end.epoch_millis();
            r.clone()
                .map(|i| {
                    let t = series.millis[i];
                    let next = match series.millis.get(i + 1) {
                        Some(&nx) => nx,
                        None => t + (period_s * 1000.0) as i64,
                    };
                    (next.min(end) - t) as f64
                })
                .collect()
        }
    };
    let total: f64 = weights.iter().sum();
    let th = &opts.thresholds;
    let band = |pred: &dyn Fn(f64) -> bool| {
        let w: f64 = values.iter().zip(&weights).filter(|(v, _)| pred(**v)).map(|(_, w)| w).fold(0.0, |a, b| a + b);
        if total > 0.0 {
            100.0 * w / total
        } else {
            0.0
        }
    };
    let tbr_low = band(&|v| v < th.low);
    let tir = band(&|v| th.low <= v && v <= th.high);
    let tar_high = band(&|v| v > th.high);
    let wear = (100.0 * n as f64 * period_s / window.length_seconds()).min(100.0);
    Ok(GlycemicReport {
        window: *window,
        n_samples: n,
        wear_time_pct: Some(wear),
        mean: Some(mean),
        sd,
        cv_pct: cv,
        gmi_pct: Some(gmi(mean)),
        tir_pct: Some(tir),
        tbr_low_pct: Some(tbr_low),
        tbr_very_low_pct: Some(band(&|v| v < th.very_low)),
        tar_high_pct: Some(tar_high),
        tar_very_high_pct: Some(band(&|v| v > th.very_high)),
    })
}

fn period_for(series: &Series, opts: &MetricOptions) -> f64 {
    opts.nominal_period_seconds
        .or_else(|| series.nominal_period())
        .unwrap_or(DEFAULT_NOMINAL_SECONDS)
}

pub fn glycemic_summary(cgm: &Signal, window: &Window, opts: &MetricOptions) -> Result<GlycemicReport, MetricsError> {
    let series = Series::new(cgm)?;
    let period = period_for(&series, opts);
    summarize(&series, window, opts, period)
}

/// One report per window in chronological order; windows without samples
/// yield [`GlycemicReport::placeholder`].
pub fn outcomes_over_time(
    record: &SubjectRecord,
    spec: &WindowSpec,
    opts: &MetricOptions,
) -> Result<Vec<GlycemicReport>, MetricsError> {
    let series = Series::new(cgm_of(record)?)?;
    let period = period_for(&series, opts);
    slice_series(&series, spec)?
        .iter()
        .map(|w| match summarize(&series, w, opts, period) {
            Err(MetricsError::NoData(_)) => Ok(GlycemicReport::placeholder(*w)),
            other => other,
        })
        .collect()
}

/// Report over the whole cgm span, from the first sample to one nominal
/// period past the last.
pub fn subject_report(record: &SubjectRecord, opts: &MetricOptions) -> Result<GlycemicReport, MetricsError> {
    let series = Series::new(cgm_of(record)?)?;
    let period = period_for(&series, opts);
    let first = series.times[0];
    let last = *series.times.last().expect("non-empty");
    let end = last.add_millis(((period * 1000.0) as i64).max(1));
    let window = Window {
        start: first,
        end: first.with_epoch_millis(end.epoch_millis()),
        partial: false,
    };
    summarize(&series, &window, opts, period)
}

/// Linear interpolation between closest ranks: rank `p * (n - 1)` in the
/// ascending sample.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub const AGP_PERCENTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct AgpProfile {
    pub bin_minutes: u32,
    pub p5: Vec<Option<f64>>,
    pub p25: Vec<Option<f64>>,
    pub p50: Vec<Option<f64>>,
    pub p75: Vec<Option<f64>>,
    pub p95: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl AgpProfile {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn curves(&self) -> [&[Option<f64>]; 5] {
        [&self.p5, &self.p25, &self.p50, &self.p75, &self.p95]
    }

    /// CSV with one row per bin: start minute of day, count and percentiles.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,n,p5,p25,p50,p75,p95\n");
        for k in 0..self.n_bins() {
            let m = k as u32 * self.bin_minutes;
            out.push_str(&format!("{:02}:{:02},{}", m / 60, m % 60, self.counts[k]));
            for c in self.curves() {
                out.push(',');
                if let Some(v) = c[k] {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Time-of-day percentile profile. Samples are binned by their own local
/// clock time.
pub fn agp_profile(cgm: &Signal, window: &Window, bin_minutes: u32) -> Result<AgpProfile, MetricsError> {
    if bin_minutes == 0 || 1440 % bin_minutes != 0 {
        return Err(MetricsError::BadBin(bin_minutes));
    }
    let series = Series::new(cgm)?;
    let r = series.range(window);
    if r.is_empty() {
        return Err(MetricsError::NoData(window.to_string()));
    }
    let n_bins = (1440 / bin_minutes) as usize;
    let bin_ms = i64::from(bin_minutes) * 60_000;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for i in r {
        let tod = series.times[i].local_millis().rem_euclid(DAY_MS);
        bins[(tod / bin_ms) as usize].push(series.values[i]);
    }
    let mut curves: [Vec<Option<f64>>; 5] = Default::default();
    for b in &mut bins {
        b.sort_by(f64::total_cmp);
        for (curve, p) in curves.iter_mut().zip(AGP_PERCENTILES) {
            curve.push(percentile(b, p));
        }
    }
    let [p5, p25, p50, p75, p95] = curves;
    Ok(AgpProfile {
        bin_minutes,
        p5,
        p25,
        p50,
        p75,
        p95,
        counts: bins.iter().map(Vec::len).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    NSamples,
    WearTime,
    Mean,
    Sd,
    Cv,
    Gmi,
    Tir,
    TbrLow,
    TbrVeryLow,
    TarHigh,
    TarVeryHigh,
}

/// Unit family used to pick a plot axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricUnit {
    Percent,
    MgDl,
    GmiPercent,
    Count,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::NSamples,
        Metric::WearTime,
        Metric::Mean,
        Metric::Sd,
        Metric::Cv,
        Metric::Gmi,
        Metric::Tir,
        Metric::TbrLow,
        Metric::TbrVeryLow,
        Metric::TarHigh,
        Metric::TarVeryHigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::NSamples => "n_samples",
            Metric::WearTime => "wear_time_pct",
            Metric::Mean => "mean",
            Metric::Sd => "sd",
            Metric::Cv => "cv_pct",
            Metric::Gmi => "gmi_pct",
            Metric::Tir => "tir_pct",
            Metric::TbrLow => "tbr_low_pct",
            Metric::TbrVeryLow => "tbr_very_low_pct",
            Metric::TarHigh => "tar_high_pct",
            Metric::TarVeryHigh => "tar_very_high_pct",
        }
    }

    pub fn unit(self) -> MetricUnit {
        match self {
            Metric::NSamples => MetricUnit::Count,
            Metric::Mean | Metric::Sd => MetricUnit::MgDl,
            Metric::Gmi => MetricUnit::GmiPercent,
            _ => MetricUnit::Percent,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricsError;

    /// Field names, or the same without the `_pct` suffix (`tir`, `cv`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().strip_suffix("_pct") == Some(s) || (s == "n" && *m == Metric::NSamples))
            .ok_or_else(|| MetricsError::UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
}

/// Per-metric summary across subjects, one report per subject. MISSING
/// values are left out of that metric's `n`. Values are sorted before
/// summing, so the result does not depend on input order.
pub fn cohort_aggregate(reports: &[GlycemicReport]) -> Result<BTreeMap<Metric, Aggregate>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyCohort);
    }
    let mut out = BTreeMap::new();
    for metric in Metric::ALL {
        let mut vals: Vec<f64> = reports.iter().filter_map(|r| r.get(metric)).collect();
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let mean = (n > 0).then(|| vals.iter().fold(0.0, |a, b| a + b) / n as f64);
        let q1 = percentile(&vals, 0.25);
        let q3 = percentile(&vals, 0.75);
        out.insert(
            metric,
            Aggregate {
                n,
                mean,
                median: percentile(&vals, 0.5),
                q1,
                q3,
                iqr: q1.zip(q3).map(|(a, b)| b - a),
            },
        );
    }
    Ok(out)
}

pub fn cohort_to_csv(agg: &BTreeMap<Metric, Aggregate>) -> String {
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("metric,n,mean,median,q1,q3,iqr\n");
    for (m, a) in agg {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m,
            a.n,
            cell(a.mean),
            cell(a.median),
            cell(a.q1),
            cell(a.q3),
            cell(a.iqr)
        ));
    }
    out
}

/// One row of a metrics report table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub file: String,
    pub subject_id: String,
    pub report: GlycemicReport,
}

pub const REPORT_COLUMNS: [&str; 16] = [
    "file",
    "subject_id",
    "window_start",
    "window_end",
    "partial",
    "n_samples",
    "wear_time_pct",
    "mean",
    "sd",
    "cv_pct",
    "gmi_pct",
    "tir_pct",
    "tbr_low_pct",
    "tbr_very_low_pct",
    "tar_high_pct",
    "tar_very_high_pct",
];

pub fn reports_to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    for row in rows {
        let r = &row.report;
        let mut rec = vec![
            row.file.clone(),
            row.subject_id.clone(),
            format_timestamp(&r.window.start),
            format_timestamp(&r.window.end),
            r.window.partial.to_string(),
        ];
        rec.extend(
            Metric::ALL
                .iter()
                .map(|&m| r.get(m).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
