//! Resampling of irregular signals onto uniform grids.
//!
//! Grids and bins are half-open: a grid covers `[start, end)` and bin `k`
//! covers `[point_k, point_k + step)`, clipped to `end`. Each signal gets its
//! own [`Policy`], so one frame can mix interpolated glucose, summed boluses
//! and integrated basal insulin.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    SignalKey, SubjectRecord, ValueKind, Values, BASAL_INJ, BASAL_RATE, BOLUS, CARBS, CGM, HEART_RATE, SMBG, STEPS,
};
use crate::model::Signal;
use crate::timeparse::{format_timestamp, TimedInstant};

const MILLIS_PER_HOUR: f64 = 3_600_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("bad grid range: {0}")]
    BadRange(String),
    #[error("policy {policy} cannot be applied to {key}: {reason}")]
    PolicyMismatch {
        key: String,
        policy: String,
        reason: String,
    },
    #[error("negative basal rate {value} at index {index}")]
    NegativeRate { index: usize, value: f64 },
    #[error("signal {0:?} not present in record")]
    UnknownKey(String),
    #[error("cannot parse {0}")]
    Parse(String),
}

/// Uniform time grid over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    start: TimedInstant,
    end: TimedInstant,
    step_seconds: i64,
}

impl Grid {
    pub fn start(&self) -> TimedInstant {
        self.start
    }

    pub fn end(&self) -> TimedInstant {
        self.end
    }

    pub fn step_seconds(&self) -> i64 {
        self.step_seconds
    }

    fn step_millis(&self) -> i64 {
        self.step_seconds * 1000
    }

    fn span_millis(&self) -> i64 {
        self.end.epoch_millis() - self.start.epoch_millis()
    }

    /// Number of points `start + k * step` strictly before `end`.
    pub fn len(&self) -> usize {
        let step = self.step_millis();
        ((self.span_millis() + step - 1) / step) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point_millis(&self, k: usize) -> i64 {
        self.start.epoch_millis() + k as i64 * self.step_millis()
    }

    /// Grid point `k`, displayed in the start instant's offset.
    pub fn point(&self, k: usize) -> TimedInstant {
        self.start.with_epoch_millis(self.point_millis(k))
    }

    pub fn points(&self) -> impl Iterator<Item = TimedInstant> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Bin index holding instant `ms`, if it lies inside `[start, end)`.
    fn bin_of(&self, ms: i64) -> Option<usize> {
        if ms < self.start.epoch_millis() || ms >= self.end.epoch_millis() {
            None
        } else {
            Some(((ms - self.start.epoch_millis()) / self.step_millis()) as usize)
        }
    }
}

pub fn make_grid(start: TimedInstant, end: TimedInstant, step_seconds: i64) -> Result<Grid, AlignError> {
    if step_seconds <= 0 {
        return Err(AlignError::BadRange(format!("step {step_seconds} s must be positive")));
    }
    if start.epoch_millis() >= end.epoch_millis() {
        return Err(AlignError::BadRange(format!("start {start} is not before end {end}")));
    }
    Ok(Grid {
        start,
        end,
        step_seconds,
    })
}

/// Rule used inside [`Policy::PreserveMissing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerRule {
    Linear { max_gap_seconds: i64 },
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Interpolate between bracketing samples no further apart than the gap
    /// limit; MISSING otherwise.
    Linear { max_gap_seconds: i64 },
    /// Last sample at or before the point; MISSING before the first sample.
    HoldUntilNext,
    /// Sum of the samples falling in each bin; empty bins are 0.
    SumIntoBin,
    /// The inner rule, but MISSING in every bin that holds no sample.
    PreserveMissing(InnerRule),
    /// Integral of a piecewise-constant rate (per hour) over each bin.
    IntegrateRate,
}

impl Policy {
    fn check(&self) -> Result<(), AlignError> {
        match self {
            Policy::Linear { max_gap_seconds } | Policy::PreserveMissing(InnerRule::Linear { max_gap_seconds })
                if *max_gap_seconds <= 0 =>
            {
                Err(AlignError::Parse(format!("max gap must be positive in {self}")))
            }
            _ => Ok(()),
        }
    }
}

fn fmt_duration(seconds: i64) -> String {
    if seconds % 3600 == 0 {
        format!("{}h", seconds / 3600)
    } else if seconds % 60 == 0 {
        format!("{}m", seconds / 60)
    } else {
        format!("{seconds}s")
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Linear { max_gap_seconds } => write!(f, "linear:{}", fmt_duration(*max_gap_seconds)),
            Policy::HoldUntilNext => f.write_str("hold"),
            Policy::SumIntoBin => f.write_str("sum"),
            Policy::PreserveMissing(InnerRule::Linear { max_gap_seconds }) => {
                write!(f, "missing:linear:{}", fmt_duration(*max_gap_seconds))
            }
            Policy::PreserveMissing(InnerRule::Hold) => f.write_str("missing:hold"),
            Policy::IntegrateRate => f.write_str("integrate"),
        }
    }
}

/// Parses `90s`, `30m` or `1h` into seconds.
pub fn parse_duration(text: &str) -> Result<i64, AlignError> {
    let err = || AlignError::Parse(format!("duration {text:?} (expected e.g. 90s, 30m, 1h)"));
    let (digits, unit) = text.split_at(text.len().checked_sub(1).ok_or_else(err)?);
    let n: i64 = digits.parse().map_err(|_| err())?;
    let mult = match unit {
        "s" => 1,
        "m" => 60,
        "h" => 3600,
        _ => return Err(err()),
    };
    if n <= 0 {
        return Err(err());
    }
    Ok(n * mult)
}

impl FromStr for Policy {
    type Err = AlignError;

    /// `linear:<dur>`, `hold`, `sum`, `integrate`, `missing:linear:<dur>`,
    /// `missing:hold`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = match s.split(':').collect::<Vec<_>>().as_slice() {
            ["linear", gap] => Policy::Linear {
                max_gap_seconds: parse_duration(gap)?,
            },
            ["hold"] => Policy::HoldUntilNext,
            ["sum"] => Policy::SumIntoBin,
            ["integrate"] => Policy::IntegrateRate,
            ["missing", "linear", gap] => Policy::PreserveMissing(InnerRule::Linear {
                max_gap_seconds: parse_duration(gap)?,
            }),
            ["missing", "hold"] => Policy::PreserveMissing(InnerRule::Hold),
            _ => return Err(AlignError::Parse(format!("policy {s:?}"))),
        };
        Ok(p)
    }
}

/// Default policy for a key: interpolate glucose-like signals with a
/// 30-minute gap limit, integrate basal rate, sum impulse signals, and hold
/// everything else.
pub fn default_policy(key: &str) -> Policy {
    match key {
        CGM | SMBG | HEART_RATE => Policy::Linear {
            max_gap_seconds: DEFAULT_MAX_GAP_SECONDS,
        },
        BASAL_RATE => Policy::IntegrateRate,
        BOLUS | BASAL_INJ | CARBS | STEPS => Policy::SumIntoBin,
        _ => Policy::HoldUntilNext,
    }
}

pub const DEFAULT_MAX_GAP_SECONDS: i64 = 30 * 60;

/// Sorted epoch-millis and values of a numeric signal.
fn numeric_series<'a>(signal: &'a Signal, key: &str, policy: &Policy) -> Result<(Vec<i64>, std::borrow::Cow<'a, [f64]>), AlignError> {
    let Values::Numeric(values) = &signal.values else {
        return Err(AlignError::PolicyMismatch {
            key: key.to_owned(),
            policy: policy.to_string(),
            reason: "signal is categorical".into(),
        });
    };
    if signal.times.len() != values.len() {
        return Err(AlignError::PolicyMismatch {
            key: key.to_owned(),
            policy: policy.to_string(),
            reason: "time and value arrays differ in length".into(),
        });
    }
    if signal.is_sorted() {
        Ok((signal.times.iter().map(TimedInstant::epoch_millis).collect(), values.as_slice().into()))
    } else {
        let sorted = signal.clone().sorted();
        let times = sorted.times.iter().map(TimedInstant::epoch_millis).collect();
        let Values::Numeric(v) = sorted.values else { unreachable!() };
        Ok((times, v.into()))
    }
}

fn linear(times: &[i64], values: &[f64], grid: &Grid, max_gap_ms: i64) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut i = 0;
    for k in 0..grid.len() {
        let t = grid.point_millis(k);
        while i < times.len() && times[i] <= t {
            i += 1;
        }
        let v = if i > 0 && times[i - 1] == t {
            Some(values[i - 1])
        } else if i > 0 && i < times.len() && times[i] - times[i - 1] <= max_gap_ms {
            let (t0, t1) = (times[i - 1], times[i]);
            let (v0, v1) = (values[i - 1], values[i]);
            Some(v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64)
        } else {
            None
        };
        out.push(v);
    }
    out
}

fn hold(times: &[i64], values: &[f64], grid: &Grid) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut i = 0;
    for k in 0..grid.len() {
        let t = grid.point_millis(k);
        while i < times.len() && times[i] <= t {
            i += 1;
        }
        out.push(if i > 0 { Some(values[i - 1]) } else { None });
    }
    out
}

fn sum_into_bins(times: &[i64], values: &[f64], grid: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for (&t, &v) in times.iter().zip(values) {
        if let Some(k) = grid.bin_of(t) {
            out[k] += v;
        }
    }
    out
}

fn occupied_bins(times: &[i64], grid: &Grid) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for &t in times {
        if let Some(k) = grid.bin_of(t) {
            out[k] = true;
        }
    }
    out
}

fn integrate(times: &[i64], rates: &[f64], grid: &Grid) -> Result<Vec<f64>, AlignError> {
    if let Some((index, &value)) = rates.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
        return Err(AlignError::NegativeRate { index, value });
    }
    let mut out = vec![0.0; grid.len()];
    let (g0, g1) = (grid.start.epoch_millis(), grid.end.epoch_millis());
    let step = grid.step_millis();
    for (i, (&t, &rate)) in times.iter().zip(rates).enumerate() {
        let seg_end = times.get(i + 1).copied().unwrap_or(g1).min(g1);
        let mut a = t.max(g0);
        if a >= seg_end || rate == 0.0 {
            continue;
        }
        while a < seg_end {
            let k = ((a - g0) / step) as usize;
            let b = (g0 + (k as i64 + 1) * step).min(seg_end);
            out[k] += rate * (b - a) as f64 / MILLIS_PER_HOUR;
            a = b;
        }
    }
    Ok(out)
}

/// Resamples one numeric signal onto a grid.
pub fn resample_signal(signal: &Signal, grid: &Grid, policy: Policy) -> Result<Vec<Option<f64>>, AlignError> {
    resample_keyed(signal, "signal", grid, policy)
}

fn resample_keyed(signal: &Signal, key: &str, grid: &Grid, policy: Policy) -> Result<Vec<Option<f64>>, AlignError> {
    policy.check()?;
    let (times, values) = numeric_series(signal, key, &policy)?;
    Ok(match policy {
        Policy::Linear { max_gap_seconds } => linear(&times, &values, grid, max_gap_seconds * 1000),
        Policy::HoldUntilNext => hold(&times, &values, grid),
        Policy::SumIntoBin => sum_into_bins(&times, &values, grid).into_iter().map(Some).collect(),
        Policy::IntegrateRate => integrate(&times, &values, grid)?.into_iter().map(Some).collect(),
        Policy::PreserveMissing(inner) => {
            let base = match inner {
                InnerRule::Linear { max_gap_seconds } => linear(&times, &values, grid, max_gap_seconds * 1000),
                InnerRule::Hold => hold(&times, &values, grid),
            };
            base.into_iter()
                .zip(occupied_bins(&times, grid))
                .map(|(v, occupied)| v.filter(|_| occupied))
                .collect()
        }
    })
}

/// Insulin delivered in each bin by a piecewise-constant basal rate (U/h).
/// The rate is zero before the first sample and the last rate runs to the
/// end of the grid.
pub fn integrate_basal(basal_rate: &Signal, grid: &Grid) -> Result<Vec<f64>, AlignError> {
    let (times, rates) = numeric_series(basal_rate, BASAL_RATE, &Policy::IntegrateRate)?;
    integrate(&times, &rates, grid)
}

/// Resampled signals sharing one grid. Categorical signals are carried as
/// event lists instead of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    pub grid: Grid,
    pub columns: BTreeMap<SignalKey, Vec<Option<f64>>>,
    pub policies: BTreeMap<SignalKey, Policy>,
    pub events: BTreeMap<SignalKey, Vec<(TimedInstant, String)>>,
    pub warnings: Vec<String>,
}

impl AlignedFrame {
    pub fn missing_count(&self, key: &str) -> usize {
        self.columns.get(key).map_or(0, |c| c.iter().filter(|v| v.is_none()).count())
    }

    /// CSV with a `time` column and one column per key; MISSING is an empty
    /// cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for key in self.columns.keys() {
            out.push(',');
            out.push_str(key.as_str());
        }
        out.push('\n');
        for (k, t) in self.grid.points().enumerate() {
            out.push_str(&format_timestamp(&t));
            for col in self.columns.values() {
                out.push(',');
                if let Some(v) = col[k] {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    /// Give every numeric signal without an explicit policy its default one.
    pub default_policies: bool,
    /// Fail on requested keys the record lacks instead of warning.
    pub strict: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            default_policies: true,
            strict: true,
        }
    }
}

pub fn align_subject(
    record: &SubjectRecord,
    grid: &Grid,
    policies: &BTreeMap<SignalKey, Policy>,
    opts: &AlignOptions,
) -> Result<AlignedFrame, AlignError> {
    let mut chosen: BTreeMap<SignalKey, Policy> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (key, &policy) in policies {
        if record.signals.contains_key(key) {
            chosen.insert(key.clone(), policy);
        } else if opts.strict {
            return Err(AlignError::UnknownKey(key.to_string()));
        } else {
            warnings.push(format!("{key}: not in record, skipped"));
        }
    }

    let mut events = BTreeMap::new();
    for (key, signal) in &record.signals {
        match &signal.values {
            Values::Categorical(labels) => {
                if chosen.contains_key(key) {
                    return Err(AlignError::PolicyMismatch {
                        key: key.to_string(),
                        policy: chosen[key].to_string(),
                        reason: "categorical signals are not resampled".into(),
                    });
                }
                let mut ev: Vec<_> = signal
                    .times
                    .iter()
                    .zip(labels)
                    .filter(|(t, _)| grid.bin_of(t.epoch_millis()).is_some())
                    .map(|(t, l)| (*t, l.clone()))
                    .collect();
                ev.sort_by_key(|(t, _)| t.epoch_millis());
                events.insert(key.clone(), ev);
            }
            Values::Numeric(_) if opts.default_policies && !chosen.contains_key(key) => {
                chosen.insert(key.clone(), default_policy(key.as_str()));
            }
            Values::Numeric(_) => {}
        }
    }

    let mut columns = BTreeMap::new();
    for (key, &policy) in &chosen {
        let signal = &record.signals[key];
        debug_assert_eq!(signal.values.kind(), ValueKind::Numeric);
        columns.insert(key.clone(), resample_keyed(signal, key.as_str(), grid, policy)?);
    }
    Ok(AlignedFrame {
        grid: *grid,
        columns,
        policies: chosen,
        events,
        warnings,
    })
}

/// Ready-made alignments for two common downstream uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 5-minute grid, fully interpolated and edge-filled: no MISSING cells in
    /// glucose-like columns whenever the signal has any sample.
    Replay,
    /// 15-minute grid; glucose interpolated only across gaps of at most 30
    /// minutes, MISSING elsewhere.
    Advisor,
}

impl Preset {
    pub fn step_seconds(self) -> i64 {
        match self {
            Preset::Replay => 5 * 60,
            Preset::Advisor => 15 * 60,
        }
    }
}

impl FromStr for Preset {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replay" => Ok(Preset::Replay),
            "advisor" => Ok(Preset::Advisor),
            _ => Err(AlignError::Parse(format!("preset {s:?}"))),
        }
    }
}

pub fn align_preset(
    record: &SubjectRecord,
    start: TimedInstant,
    end: TimedInstant,
    preset: Preset,
) -> Result<AlignedFrame, AlignError> {
    let grid = make_grid(start, end, preset.step_seconds())?;
    let mut policies = BTreeMap::new();
    if preset == Preset::Replay {
        for key in [CGM, SMBG, HEART_RATE] {
            if record.signals.contains_key(key) {
                policies.insert(
                    SignalKey::new(key).expect("registry key"),
                    Policy::Linear {
                        max_gap_seconds: i64::from(u32::MAX),
                    },
                );
            }
        }
    }
    let mut frame = align_subject(record, &grid, &policies, &AlignOptions::default())?;
    if preset == Preset::Replay {
        for col in frame.columns.values_mut() {
            edge_fill(col);
        }
    }
    Ok(frame)
}

/// Fills leading MISSING cells with the first value and trailing ones with
/// the last value.
fn edge_fill(col: &mut [Option<f64>]) {
    let Some(first) = col.iter().position(Option::is_some) else {
        return;
    };
    let last = col.iter().rposition(Option::is_some).expect("some value");
    let (head, tail) = (col[first], col[last]);
    col[..first].fill(head);
    col[last + 1..].fill(tail);
}
