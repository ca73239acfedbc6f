//! Mapping-spec driven conversion of tabular exports into subject records,
//! and a seeded synthetic subject generator.
//!
//! A mapping spec is a JSON document:
//!
//! ```json
//! {
//!   "trial_name": "MyTrial",
//!   "subject_id_column": "PtID",
//!   "rules": [
//!     { "target": "cgm", "source_table": "glucose", "time_column": "DeviceDtTm",
//!       "value_column": "Glucose", "unit_in": "mmol/L", "scale": 18.016, "offset": 0,
//!       "metadata": { "unit": "mg/dL", "description": "CGM values" } }
//!   ]
//! }
//! ```
//!
//! Each rule reads one table. Numeric cells become `value * scale + offset`;
//! `carb_category` cells go through `category_map`. `time_format` is an
//! optional strftime pattern for sources that do not use the DIAX grammar.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use chrono::format::{Item, StrftimeItems};
use chrono::{DateTime, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    format_subject_filename, kind_for, CarbCategory, Signal, SignalKey, SignalMetadata, SubjectRecord, ValueKind,
    Values, BASAL_RATE, BOLUS, CARBS, CARB_CATEGORY, CGM,
};
use crate::timeparse::{parse_timestamp, TimedInstant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("mapping spec error at {path}: {message}")]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

fn spec_err(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub table: String,
    /// 1-based data row (header excluded).
    pub row: usize,
    pub column: String,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} row {} column {}: {}", self.table, self.row, self.column, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("table {0:?} not provided")]
    TableMissing(String),
    #[error("table {table:?} has no column {column:?}")]
    ColumnMissing { table: String, column: String },
    #[error("table {table:?}: row {row} has {got} cells, header has {want}")]
    Arity {
        table: String,
        row: usize,
        got: usize,
        want: usize,
    },
    #[error("{} bad row(s), first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("bad synthetic profile: {0}")]
    BadProfile(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Target-side rule of a mapping spec.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingRule {
    pub target: SignalKey,
    pub source_table: String,
    pub time_column: String,
    pub time_format: Option<String>,
    pub value_column: String,
    pub unit_in: String,
    pub scale: f64,
    pub offset: f64,
    pub category_map: Option<BTreeMap<String, CarbCategory>>,
    pub metadata: SignalMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    pub trial_name: String,
    pub subject_id_column: String,
    pub rules: Vec<MappingRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    trial_name: String,
    subject_id_column: String,
    rules: Vec<RuleDoc>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    target: String,
    source_table: String,
    time_column: String,
    #[serde(default)]
    time_format: Option<String>,
    value_column: String,
    unit_in: String,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    category_map: Option<BTreeMap<String, String>>,
    metadata: SignalMetadata,
}

/// Parses and validates a mapping spec document.
pub fn load_mapping_spec(document: &str) -> Result<MappingSpec, SpecError> {
    let doc: SpecDoc = serde_json::from_str(document).map_err(|e| spec_err("$", e.to_string()))?;
    format_subject_filename(&doc.trial_name, "x").map_err(|e| spec_err("trial_name", e.to_string()))?;
    if doc.subject_id_column.is_empty() {
        return Err(spec_err("subject_id_column", "missing column name"));
    }
    if doc.rules.is_empty() {
        return Err(spec_err("rules", "at least one rule is required"));
    }

    let mut rules = Vec::with_capacity(doc.rules.len());
    let mut seen: BTreeMap<SignalKey, usize> = BTreeMap::new();
    for (i, r) in doc.rules.into_iter().enumerate() {
        let at = |field: &str| format!("rules[{i}].{field}");
        let target = SignalKey::new(r.target).map_err(|e| spec_err(at("target"), e.to_string()))?;
        for (field, value) in [
            ("source_table", &r.source_table),
            ("time_column", &r.time_column),
            ("value_column", &r.value_column),
        ] {
            if value.is_empty() {
                return Err(spec_err(at(field), "missing column name"));
            }
        }
        if !r.scale.is_finite() || r.scale == 0.0 {
            return Err(spec_err(at("scale"), "scale must be finite and non-zero"));
        }
        if !r.offset.is_finite() {
            return Err(spec_err(at("offset"), "offset must be finite"));
        }
        if r.metadata.unit.is_empty() || r.metadata.description.is_empty() {
            return Err(spec_err(at("metadata"), "unit and description are required"));
        }
        if let Some(unit) = target.registry_entry().and_then(|e| e.unit) {
            if r.metadata.unit != unit {
                return Err(spec_err(
                    at("metadata.unit"),
                    format!("{} must be stored in {unit:?}, got {:?}", target, r.metadata.unit),
                ));
            }
        }
        if let Some(fmt) = &r.time_format {
            if StrftimeItems::new(fmt).any(|item| matches!(item, Item::Error)) {
                return Err(spec_err(at("time_format"), format!("invalid pattern {fmt:?}")));
            }
        }
        let category_map = match r.category_map {
            None => None,
            Some(_) if target.as_str() != CARB_CATEGORY => {
                return Err(spec_err(at("category_map"), "only valid for carb_category targets"));
            }
            Some(map) => Some(
                map.into_iter()
                    .map(|(k, v)| {
                        v.parse::<CarbCategory>()
                            .map(|c| (k.clone(), c))
                            .map_err(|msg| spec_err(format!("{}.{k}", at("category_map")), msg))
                    })
                    .collect::<Result<BTreeMap<_, _>, _>>()?,
            ),
        };
        if let Some(&j) = seen.get(&target) {
            let prev: &MappingRule = &rules[j];
            if prev.metadata != r.metadata {
                return Err(spec_err(
                    at("metadata"),
                    format!("differs from rules[{j}] for the same target"),
                ));
            }
        } else {
            seen.insert(target.clone(), i);
        }
        rules.push(MappingRule {
            target,
            source_table: r.source_table,
            time_column: r.time_column,
            time_format: r.time_format,
            value_column: r.value_column,
            unit_in: r.unit_in,
            scale: r.scale,
            offset: r.offset,
            category_map,
            metadata: r.metadata,
        });
    }
    Ok(MappingSpec {
        trial_name: doc.trial_name,
        subject_id_column: doc.subject_id_column,
        rules,
    })
}

/// A header plus string rows, all of header arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTable {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl SourceTable {
    pub fn new(name: impl Into<String>, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, ConvertError> {
        let name = name.into();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
            return Err(ConvertError::Arity {
                table: name,
                row: i + 1,
                got: row.len(),
                want: header.len(),
            });
        }
        Ok(SourceTable { name, header, rows })
    }

    /// Reads RFC-4180 CSV with a header row.
    pub fn from_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self, ConvertError> {
        let name = name.into();
        let io = |e: csv::Error| ConvertError::Io {
            path: name.clone(),
            message: e.to_string(),
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers().map_err(io)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(io)?.iter().map(str::to_owned).collect());
        }
        SourceTable::new(name, header, rows)
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// Loads every `*.csv` in a directory as a table named after the file stem.
pub fn load_tables(dir: &Path) -> Result<Vec<SourceTable>, ConvertError> {
    let io = |e: std::io::Error| ConvertError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let file = std::fs::File::open(&p).map_err(io)?;
            SourceTable::from_csv(name, file)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowPolicy {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConvertOptions {
    pub fallback_offset_minutes: i32,
    pub row_policy: RowPolicy,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConversionLog {
    pub warnings: Vec<String>,
    pub skipped: Vec<RowError>,
    /// Samples emitted per rule, in rule order.
    pub emitted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvertedSubject {
    pub subject_id: String,
    pub record: SubjectRecord,
}

impl ConvertedSubject {
    pub fn filename(&self, trial: &str) -> Result<String, crate::model::ModelError> {
        format_subject_filename(trial, &self.subject_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub subjects: Vec<ConvertedSubject>,
    pub log: ConversionLog,
}

/// Parses a decimal cell: '.' separator only, finite.
pub fn parse_decimal(cell: &str) -> Result<f64, String> {
    let t = cell.trim();
    if t.is_empty() {
        return Err("empty cell".into());
    }
    if !t.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E')) {
        return Err(format!("{t:?} is not a decimal number"));
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{t:?} is not a decimal number")),
    }
}

fn parse_time_cell(cell: &str, format: Option<&str>, fallback: i32) -> Result<TimedInstant, String> {
    let cell = cell.trim();
    let Some(fmt) = format else {
        return parse_timestamp(cell, fallback).map_err(|e| e.to_string());
    };
    if fmt.contains("%z") || fmt.contains("%:z") || fmt.contains("%#z") {
        let dt = DateTime::parse_from_str(cell, fmt).map_err(|e| format!("{cell:?}: {e}"))?;
        TimedInstant::new(dt.timestamp_millis(), dt.offset().local_minus_utc() / 60, true)
            .map_err(|e| e.to_string())
    } else {
        let dt = NaiveDateTime::parse_from_str(cell, fmt).map_err(|e| format!("{cell:?}: {e}"))?;
        let local = dt.and_utc().timestamp_millis();
        TimedInstant::new(local - i64::from(fallback) * 60_000, fallback, false).map_err(|e| e.to_string())
    }
}

enum Cell {
    Number(f64),
    Category(String),
}

fn convert_cell(rule: &MappingRule, kind: ValueKind, cell: &str) -> Result<Cell, String> {
    match kind {
        ValueKind::Numeric => {
            let v = parse_decimal(cell)? * rule.scale + rule.offset;
            if v.is_finite() {
                Ok(Cell::Number(v))
            } else {
                Err("converted value is not finite".into())
            }
        }
        ValueKind::Categorical => {
            let raw = cell.trim();
            let mapped = match &rule.category_map {
                Some(map) => map
                    .get(raw)
                    .map(|c| c.as_str().to_owned())
                    .ok_or_else(|| format!("category {raw:?} is not mapped"))?,
                None => raw.to_owned(),
            };
            if rule.target.as_str() == CARB_CATEGORY {
                mapped.parse::<CarbCategory>()?;
            }
            Ok(Cell::Category(mapped))
        }
    }
}

/// Converts source tables into one record per subject, ordered by subject id.
pub fn convert_tables(
    tables: &[SourceTable],
    spec: &MappingSpec,
    opts: &ConvertOptions,
) -> Result<Conversion, ConvertError> {
    let by_name: BTreeMap<&str, &SourceTable> = tables.iter().map(|t| (t.name.as_str(), t)).collect();
    let mut log = ConversionLog::default();

    struct Resolved<'a> {
        table: &'a SourceTable,
        subject: usize,
        time: usize,
        value: usize,
    }
    let mut resolved = Vec::with_capacity(spec.rules.len());
    for rule in &spec.rules {
        let table = *by_name
            .get(rule.source_table.as_str())
            .ok_or_else(|| ConvertError::TableMissing(rule.source_table.clone()))?;
        let col = |name: &str| {
            table.column(name).ok_or_else(|| ConvertError::ColumnMissing {
                table: table.name.clone(),
                column: name.to_owned(),
            })
        };
        resolved.push(Resolved {
            table,
            subject: col(&spec.subject_id_column)?,
            time: col(&rule.time_column)?,
            value: col(&rule.value_column)?,
        });
    }

    let has_cgm_rule = spec.rules.iter().any(|r| r.target.as_str() == CGM);
    if !has_cgm_rule {
        log.warnings.push("NoCgmRule: no rule targets cgm; records will fail validation".into());
    }

    // subject -> key -> (times, values)
    type Partial = (Vec<TimedInstant>, Vec<Cell>);
    let mut subjects: BTreeMap<String, BTreeMap<SignalKey, Partial>> = BTreeMap::new();
    let mut errors = Vec::new();
    for (rule, res) in spec.rules.iter().zip(&resolved) {
        let kind = kind_for(rule.target.as_str(), Some(&rule.metadata));
        let mut emitted = 0;
        for (i, row) in res.table.rows().iter().enumerate() {
            let fail = |column: &str, message: String| RowError {
                table: res.table.name.clone(),
                row: i + 1,
                column: column.to_owned(),
                message,
            };
            let sid = row[res.subject].trim();
            let parsed = if sid.is_empty() {
                Err(fail(&spec.subject_id_column, "empty subject id".into()))
            } else {
                parse_time_cell(&row[res.time], rule.time_format.as_deref(), opts.fallback_offset_minutes)
                    .map_err(|m| fail(&rule.time_column, m))
                    .and_then(|t| {
                        convert_cell(rule, kind, &row[res.value])
                            .map(|v| (t, v))
                            .map_err(|m| fail(&rule.value_column, m))
                    })
            };
            match parsed {
                Ok((t, v)) => {
                    let entry = subjects
                        .entry(sid.to_owned())
                        .or_default()
                        .entry(rule.target.clone())
                        .or_default();
                    entry.0.push(t);
                    entry.1.push(v);
                    emitted += 1;
                }
                Err(e) => errors.push(e),
            }
        }
        log.emitted.push(emitted);
    }
    if !errors.is_empty() {
        match opts.row_policy {
            RowPolicy::Fail => return Err(ConvertError::Rows(errors)),
            RowPolicy::Skip => log.skipped = errors,
        }
    }

    let metadata: BTreeMap<&SignalKey, &SignalMetadata> =
        spec.rules.iter().rev().map(|r| (&r.target, &r.metadata)).collect();
    let mut out = Vec::with_capacity(subjects.len());
    for (sid, streams) in subjects {
        if has_cgm_rule && !streams.contains_key(CGM) {
            log.warnings.push(format!("subject {sid:?} has no cgm samples; not emitted"));
            continue;
        }
        let mut record = SubjectRecord::new(format!("{}-{sid}", spec.trial_name));
        for (key, (times, cells)) in streams {
            let values = if cells.iter().all(|c| matches!(c, Cell::Number(_))) {
                Values::Numeric(
                    cells
                        .into_iter()
                        .map(|c| match c {
                            Cell::Number(v) => v,
                            Cell::Category(_) => unreachable!(),
                        })
                        .collect(),
                )
            } else {
                Values::Categorical(
                    cells
                        .into_iter()
                        .map(|c| match c {
                            Cell::Category(s) => s,
                            Cell::Number(v) => v.to_string(),
                        })
                        .collect(),
                )
            };
            let meta = (*metadata[&key]).clone();
            record.insert(key, Signal { times, values }.sorted(), meta);
        }
        out.push(ConvertedSubject { subject_id: sid, record });
    }
    Ok(Conversion { subjects: out, log })
}

/// Flattens records into long tables, one per signal key, with columns
/// `subject_id,time,value`.
pub fn records_to_tables<'a>(subjects: impl IntoIterator<Item = (&'a str, &'a SubjectRecord)>) -> Vec<SourceTable> {
    let mut rows: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for (sid, record) in subjects {
        for (key, signal) in &record.signals {
            let table = rows.entry(key.as_str().to_owned()).or_default();
            for (i, t) in signal.times.iter().enumerate() {
                let value = match &signal.values {
                    Values::Numeric(v) => v[i].to_string(),
                    Values::Categorical(v) => v[i].clone(),
                };
                table.push(vec![sid.to_owned(), t.to_string(), value]);
            }
        }
    }
    let header = vec!["subject_id".to_string(), "time".to_string(), "value".to_string()];
    rows.into_iter()
        .map(|(name, rows)| SourceTable::new(name, header.clone(), rows).expect("three cells per row"))
        .collect()
}

/// Parameters of the synthetic subject generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProfile {
    pub basal_u_per_h: f64,
    pub meals_per_day: u32,
    pub cgm_mean: f64,
    pub cgm_amplitude: f64,
    /// Standard deviation of the per-sample sensor noise, mg/dL.
    pub noise_sd: f64,
    pub start: TimedInstant,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        SyntheticProfile {
            basal_u_per_h: 1.0,
            meals_per_day: 3,
            cgm_mean: 140.0,
            cgm_amplitude: 30.0,
            noise_sd: 8.0,
            // 2021-03-01 00:00:00 +00:00
            start: TimedInstant::utc_millis(1_614_556_800_000),
        }
    }
}

const CARBS_PER_UNIT: f64 = 10.0;
const MEAL_RISE_PER_GRAM: f64 = 1.2;
const MEAL_PEAK_MINUTES: f64 = 50.0;

/// Generates one subject. Output depends only on the arguments.
pub fn generate_synthetic(
    seed: u64,
    days: u32,
    step_minutes: u32,
    profile: &SyntheticProfile,
) -> Result<SubjectRecord, ConvertError> {
    let bad = |m: &str| Err(ConvertError::BadProfile(m.to_owned()));
    if days < 1 {
        return bad("days must be at least 1");
    }
    if ![1, 5, 15].contains(&step_minutes) {
        return bad("step_minutes must be 1, 5 or 15");
    }
    if !(profile.basal_u_per_h > 0.0 && profile.basal_u_per_h <= 10.0) {
        return bad("basal_u_per_h must be in (0, 10]");
    }
    if profile.meals_per_day == 0 || profile.meals_per_day > 8 {
        return bad("meals_per_day must be in 1..=8");
    }
    if !(profile.cgm_mean > 0.0 && profile.cgm_amplitude > 0.0) {
        return bad("cgm_mean and cgm_amplitude must be positive");
    }
    if !(profile.noise_sd >= 0.0 && profile.noise_sd.is_finite()) {
        return bad("noise_sd must be non-negative");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, profile.noise_sd).expect("checked sd");
    let t0 = profile.start;
    const MIN: i64 = 60_000;
    const DAY: i64 = 24 * 60 * MIN;

    let mut basal = (Vec::new(), Vec::new());
    let mut meals: Vec<(i64, f64)> = Vec::new();
    for d in 0..i64::from(days) {
        for block in 0..4 {
            let factor: f64 = rng.random_range(0.7..1.3);
            let rate = (profile.basal_u_per_h * factor * 20.0).round() / 20.0;
            basal.0.push(t0.add_millis(d * DAY + block * 6 * 60 * MIN));
            basal.1.push(rate.max(0.05));
        }
        let m = profile.meals_per_day;
        for k in 0..m {
            let nominal = if m == 1 {
                12.0 * 60.0
            } else {
                7.0 * 60.0 + f64::from(k) * 13.0 * 60.0 / f64::from(m - 1)
            };
            let jitter: f64 = rng.random_range(-30.0..30.0);
            let minute = (nominal + jitter).round() as i64;
            let carbs = f64::from(rng.random_range(20u32..=90));
            meals.push((d * DAY + minute * MIN, carbs));
        }
    }

    let step = i64::from(step_minutes) * MIN;
    let n = i64::from(days) * DAY / step;
    let mut cgm = (Vec::with_capacity(n as usize), Vec::with_capacity(n as usize));
    let mut meal_idx = 0;
    for k in 0..n {
        let at = k * step;
        let hour = (at % DAY) as f64 / (60.0 * MIN as f64);
        let mut g = profile.cgm_mean + profile.cgm_amplitude * (2.0 * PI * (hour - 4.0) / 24.0).sin();
        while meal_idx < meals.len() && meals[meal_idx].0 < at - 6 * 60 * MIN {
            meal_idx += 1;
        }
        for &(mt, carbs) in meals[meal_idx..].iter().take_while(|(mt, _)| *mt <= at) {
            let x = (at - mt) as f64 / (MEAL_PEAK_MINUTES * MIN as f64);
            g += carbs * MEAL_RISE_PER_GRAM * x * (1.0 - x).exp();
        }
        g += noise.sample(&mut rng);
        cgm.0.push(t0.add_millis(at));
        cgm.1.push(g.round().clamp(40.0, 400.0));
    }

    let mut bolus = (Vec::new(), Vec::new());
    let mut carbs = (Vec::new(), Vec::new());
    for &(mt, grams) in &meals {
        let t = t0.add_millis(mt);
        carbs.0.push(t);
        carbs.1.push(grams);
        bolus.0.push(t);
        bolus.1.push((grams / CARBS_PER_UNIT * 20.0).round() / 20.0);
    }

    let key = |s: &str| SignalKey::new(s).expect("registry key");
    let meta = |s: &str| SignalMetadata::canonical(s).expect("registry key");
    let mut r = SubjectRecord::new(format!("Synthetic-{seed}"));
    r.insert(
        key(CGM),
        Signal::numeric(cgm.0, cgm.1)?,
        meta(CGM).with_device("Synthetic CGM"),
    );
    r.insert(
        key(BASAL_RATE),
        Signal::numeric(basal.0, basal.1)?,
        meta(BASAL_RATE).with_device("Synthetic pump").with_insulin("insulin lispro"),
    );
    r.insert(
        key(BOLUS),
        Signal::numeric(bolus.0, bolus.1)?.sorted(),
        meta(BOLUS).with_device("Synthetic pump").with_insulin("insulin lispro"),
    );
    r.insert(key(CARBS), Signal::numeric(carbs.0, carbs.1)?.sorted(), meta(CARBS));
    Ok(r)
}

impl From<crate::model::ModelError> for ConvertError {
    fn from(e: crate::model::ModelError) -> Self {
        ConvertError::BadProfile(e.to_string())
    }
}
