//! DIAX subject records and their canonical JSON encoding.
//!
//! A subject file holds one top-level `unique_id`, one object per signal key
//! with parallel `time`/`value` arrays, and a `metadata` object describing
//! every signal:
//!
//! ```json
//! {
//!   "unique_id": "MyTrial-001",
//!   "cgm": { "time": ["2021-03-05 14:30:00 +00:00"], "value": [101.0] },
//!   "metadata": { "cgm": { "unit": "mg/dL", "description": "CGM values" } }
//! }
//! ```
//!
//! Reading happens in two layers. [`decode_subject`] only rejects documents it
//! cannot represent (bad JSON, wrong value types, bad timestamps).
//! [`read_subject`] additionally enforces the record invariants, which is
//! what most callers want. The validator works on decoded records so it can
//! report every problem instead of the first one.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::timeparse::{format_timestamp, parse_timestamp, TimedInstant, TimestampError};

pub const CGM: &str = "cgm";
pub const BOLUS: &str = "bolus";
pub const BASAL_RATE: &str = "basal_rate";
pub const BASAL_INJ: &str = "basal_inj";
pub const CARBS: &str = "carbs";
pub const CARB_CATEGORY: &str = "carb_category";
pub const SMBG: &str = "smbg";
pub const HBA1C: &str = "hba1c";
pub const HEART_RATE: &str = "heart_rate";
pub const STEPS: &str = "steps";
pub const HEIGHT: &str = "height";
pub const WEIGHT: &str = "weight";

/// Metadata `precision` value that marks an extension key as categorical.
pub const CATEGORICAL_PRECISION: &str = "categorical";

const UNIQUE_ID_FIELD: &str = "unique_id";
const METADATA_FIELD: &str = "metadata";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("bad timestamp at {path}: {source}")]
    Timestamp {
        path: String,
        #[source]
        source: TimestampError,
    },
    #[error("record invariant violated: {0}")]
    InvariantViolation(String),
    #[error("invalid signal key {0:?}")]
    BadKey(String),
    #[error("filename {0:?} does not match subj_<trial>_<id>.json")]
    BadFilename(String),
    #[error("invalid filename component: {0}")]
    BadComponent(String),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Numeric,
    Categorical,
}

/// Registry entry for a well-known signal key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyInfo {
    pub name: &'static str,
    /// Canonical unit; `None` where no unit applies.
    pub unit: Option<&'static str>,
    pub kind: ValueKind,
    pub description: &'static str,
}

const fn numeric(name: &'static str, unit: &'static str, description: &'static str) -> KeyInfo {
    KeyInfo {
        name,
        unit: Some(unit),
        kind: ValueKind::Numeric,
        description,
    }
}

static REGISTRY: [KeyInfo; 12] = [
    numeric(BASAL_INJ, "U", "Basal injection (for MDI)"),
    numeric(BASAL_RATE, "U/h", "Basal insulin delivery rate"),
    numeric(BOLUS, "U", "Insulin boluses (meal or correction)"),
    KeyInfo {
        name: CARB_CATEGORY,
        unit: None,
        kind: ValueKind::Categorical,
        description: "Announced type of meal",
    },
    numeric(CARBS, "g", "Carbohydrate intake"),
    numeric(CGM, "mg/dL", "CGM values"),
    numeric(HBA1C, "%", "Measured HbA1c value"),
    numeric(HEART_RATE, "bps", "Recorded heart-rate"),
    numeric(HEIGHT, "cm", "Height of subject"),
    numeric(SMBG, "mg/dL", "Self-monitored blood glucose measurements"),
    numeric(STEPS, "steps per ten seconds", "Recorded steps in a 10 second interval"),
    numeric(WEIGHT, "kg", "Weight of subject"),
];

/// All registry keys, sorted by name.
pub fn registry() -> &'static [KeyInfo] {
    &REGISTRY
}

pub fn registry_entry(name: &str) -> Option<&'static KeyInfo> {
    REGISTRY.iter().find(|k| k.name == name)
}

/// Name of one signal stream. Lowercase ASCII letters, digits and
/// underscores, starting with a letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignalKey(String);

impl SignalKey {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = matches!(chars.next(), Some('a'..='z'))
            && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
            && name != UNIQUE_ID_FIELD
            && name != METADATA_FIELD;
        if ok {
            Ok(SignalKey(name))
        } else {
            Err(ModelError::BadKey(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn registry_entry(&self) -> Option<&'static KeyInfo> {
        registry_entry(&self.0)
    }
}

impl Borrow<str> for SignalKey {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SignalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SignalKey {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SignalKey::new(s)
    }
}

/// Announced meal type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CarbCategory {
    /// Hypo treatment.
    #[serde(rename = "HT")]
    HypoTreatment,
    Less,
    Typical,
    More,
    /// Simple announcement.
    #[serde(rename = "Ann")]
    Announcement,
}

impl CarbCategory {
    pub const ALL: [CarbCategory; 5] = [
        CarbCategory::HypoTreatment,
        CarbCategory::Less,
        CarbCategory::Typical,
        CarbCategory::More,
        CarbCategory::Announcement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CarbCategory::HypoTreatment => "HT",
            CarbCategory::Less => "Less",
            CarbCategory::Typical => "Typical",
            CarbCategory::More => "More",
            CarbCategory::Announcement => "Ann",
        }
    }
}

impl FromStr for CarbCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CarbCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("{s:?} is not one of HT, Less, Typical, More, Ann"))
    }
}

/// Value array of one signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Numeric(v) => v.len(),
            Values::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Values::Numeric(_) => ValueKind::Numeric,
            Values::Categorical(_) => ValueKind::Categorical,
        }
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Values::Numeric(v) => Some(v),
            Values::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[String]> {
        match self {
            Values::Categorical(v) => Some(v),
            Values::Numeric(_) => None,
        }
    }

    fn permute(&self, order: &[usize]) -> Values {
        match self {
            Values::Numeric(v) => Values::Numeric(order.iter().map(|&i| v[i]).collect()),
            Values::Categorical(v) => Values::Categorical(order.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Parallel time and value arrays for one key.
///
/// Fields are public so that decoders and the validator can hold records
/// that break invariants; use the constructors to build checked signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub times: Vec<TimedInstant>,
    pub values: Values,
}

impl Signal {
    pub fn numeric(times: Vec<TimedInstant>, values: Vec<f64>) -> Result<Self, ModelError> {
        let s = Signal {
            times,
            values: Values::Numeric(values),
        };
        s.check().map_err(ModelError::InvariantViolation)?;
        Ok(s)
    }

    pub fn categorical(times: Vec<TimedInstant>, values: Vec<String>) -> Result<Self, ModelError> {
        let s = Signal {
            times,
            values: Values::Categorical(values),
        };
        s.check().map_err(ModelError::InvariantViolation)?;
        Ok(s)
    }

    pub fn empty(kind: ValueKind) -> Self {
        Signal {
            times: Vec::new(),
            values: match kind {
                ValueKind::Numeric => Values::Numeric(Vec::new()),
                ValueKind::Categorical => Values::Categorical(Vec::new()),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Parallel lengths and finite numbers.
    fn check(&self) -> Result<(), String> {
        if self.times.len() != self.values.len() {
            return Err(format!(
                "{} timestamps but {} values",
                self.times.len(),
                self.values.len()
            ));
        }
        if let Values::Numeric(v) = &self.values {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(format!("non-finite value at index {i}"));
            }
        }
        Ok(())
    }

    pub fn is_sorted(&self) -> bool {
        self.times.windows(2).all(|w| w[0].epoch_millis() <= w[1].epoch_millis())
    }

    /// Stable chronological sort of both arrays.
    pub fn sort_by_time(&mut self) {
        if self.is_sorted() {
            return;
        }
        let mut order: Vec<usize> = (0..self.times.len()).collect();
        order.sort_by_key(|&i| self.times[i].epoch_millis());
        self.times = order.iter().map(|&i| self.times[i]).collect();
        self.values = self.values.permute(&order);
    }

    pub fn sorted(mut self) -> Self {
        self.sort_by_time();
        self
    }

    /// Earliest and latest instant, regardless of array order.
    pub fn span(&self) -> Option<(TimedInstant, TimedInstant)> {
        let first = self.times.iter().min_by_key(|t| t.epoch_millis())?;
        let last = self.times.iter().max_by_key(|t| t.epoch_millis())?;
        Some((*first, *last))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalMetadata {
    pub unit: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insulin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medication: Option<String>,
    /// Fields outside the standard set, kept verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SignalMetadata {
    pub fn new(unit: impl Into<String>, description: impl Into<String>) -> Self {
        SignalMetadata {
            unit: unit.into(),
            description: description.into(),
            ..Default::default()
        }
    }

    pub fn with_device(mut self, device: impl Into<String>) -> Self {
        self.device = Some(device.into());
        self
    }

    pub fn with_insulin(mut self, insulin: impl Into<String>) -> Self {
        self.insulin = Some(insulin.into());
        self
    }

    /// Registry metadata with the canonical unit and description.
    pub fn canonical(key: &str) -> Option<Self> {
        let info = registry_entry(key)?;
        Some(SignalMetadata::new(info.unit.unwrap_or("category"), info.description))
    }

    pub fn is_categorical(&self) -> bool {
        self.precision.as_deref() == Some(CATEGORICAL_PRECISION)
    }
}

/// Value kind a key is decoded as: registry kind, otherwise numeric unless
/// the metadata marks it categorical.
pub fn kind_for(key: &str, metadata: Option<&SignalMetadata>) -> ValueKind {
    match registry_entry(key) {
        Some(info) => info.kind,
        None if metadata.is_some_and(SignalMetadata::is_categorical) => ValueKind::Categorical,
        None => ValueKind::Numeric,
    }
}

/// One subject's full content.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubjectRecord {
    pub unique_id: String,
    pub signals: BTreeMap<SignalKey, Signal>,
    pub metadata: BTreeMap<SignalKey, SignalMetadata>,
}

/// A broken record invariant, addressed by signal key where one applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: Option<String>,
    pub message: String,
}

impl SubjectRecord {
    pub fn new(unique_id: impl Into<String>) -> Self {
        SubjectRecord {
            unique_id: unique_id.into(),
            ..Default::default()
        }
    }

    /// Inserts (or replaces) a signal together with its metadata.
    pub fn insert(&mut self, key: SignalKey, signal: Signal, metadata: SignalMetadata) {
        self.signals.insert(key.clone(), signal);
        self.metadata.insert(key, metadata);
    }

    pub fn signal(&self, key: &str) -> Option<&Signal> {
        self.signals.get(key)
    }

    pub fn cgm(&self) -> Option<&Signal> {
        self.signal(CGM)
    }

    /// Structural invariants: non-empty id, required cgm, parallel arrays,
    /// finite numbers, metadata coverage and registry value kinds.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |key: Option<&str>, message: String| {
            out.push(Violation {
                key: key.map(str::to_owned),
                message,
            })
        };
        if self.unique_id.is_empty() {
            push(Some(UNIQUE_ID_FIELD), "unique_id is empty".into());
        }
        if !self.signals.contains_key(CGM) {
            push(Some(CGM), "required signal cgm is missing".into());
        }
        for (key, signal) in &self.signals {
            if let Err(msg) = signal.check() {
                push(Some(key.as_str()), msg);
            }
            let expected = kind_for(key.as_str(), self.metadata.get(key));
            if signal.values.kind() != expected {
                push(Some(key.as_str()), format!("expected {expected:?} values"));
            }
            if key.as_str() == CARB_CATEGORY {
                if let Some(values) = signal.values.as_categorical() {
                    if let Some(bad) = values.iter().find(|v| v.parse::<CarbCategory>().is_err()) {
                        push(Some(key.as_str()), format!("{bad:?} is not a carb category"));
                    }
                }
            }
            if !self.metadata.contains_key(key) {
                push(Some(key.as_str()), "no metadata entry".into());
            }
        }
        for (key, meta) in &self.metadata {
            if !self.signals.contains_key(key) {
                push(Some(key.as_str()), "metadata entry without signal".into());
            }
            if meta.unit.is_empty() || meta.description.is_empty() {
                push(Some(key.as_str()), "metadata unit and description must be non-empty".into());
            }
        }
        out
    }

    pub fn check_invariants(&self) -> Result<(), ModelError> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(ModelError::InvariantViolation(match v.key {
                Some(k) => format!("{k}: {}", v.message),
                None => v.message,
            })),
        }
    }

    /// Sorts every signal chronologically.
    pub fn sort_signals(&mut self) {
        for s in self.signals.values_mut() {
            s.sort_by_time();
        }
    }
}

/// Options shared by everything that turns text into records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReadOptions {
    /// Offset assumed for timestamps without zone information.
    pub fallback_offset_minutes: i32,
}

impl ReadOptions {
    pub fn with_fallback(fallback_offset_minutes: i32) -> Self {
        ReadOptions {
            fallback_offset_minutes,
        }
    }
}

/// Decodes a document without enforcing record invariants.
pub fn decode_subject(bytes: &[u8], opts: &ReadOptions) -> Result<SubjectRecord, ModelError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    let Value::Object(mut top) = doc else {
        return Err(schema("$", "top level must be an object"));
    };

    let unique_id = match top.remove(UNIQUE_ID_FIELD) {
        Some(Value::String(s)) => s,
        Some(_) => return Err(schema(UNIQUE_ID_FIELD, "must be a string")),
        None => return Err(schema(UNIQUE_ID_FIELD, "missing")),
    };

    let mut metadata = BTreeMap::new();
    match top.remove(METADATA_FIELD) {
        Some(Value::Object(entries)) => {
            for (name, entry) in entries {
                let path = format!("metadata.{name}");
                let key = SignalKey::new(name).map_err(|e| schema(&path, e.to_string()))?;
                let meta: SignalMetadata = serde_json::from_value(entry).map_err(|e| schema(&path, e.to_string()))?;
                metadata.insert(key, meta);
            }
        }
        Some(_) => return Err(schema(METADATA_FIELD, "must be an object")),
        None => {}
    }

    let mut signals = BTreeMap::new();
    for (name, body) in top {
        let key = SignalKey::new(name.as_str()).map_err(|e| schema(&name, e.to_string()))?;
        let kind = kind_for(&name, metadata.get(&key));
        let signal = decode_signal(&name, body, kind, opts)?;
        signals.insert(key, signal);
    }

    Ok(SubjectRecord {
        unique_id,
        signals,
        metadata,
    })
}

fn decode_signal(name: &str, body: Value, kind: ValueKind, opts: &ReadOptions) -> Result<Signal, ModelError> {
    let Value::Object(mut fields) = body else {
        return Err(schema(name, "signal must be an object with time and value arrays"));
    };
    let times = match fields.remove("time") {
        Some(Value::Array(items)) => items,
        _ => return Err(schema(format!("{name}.time"), "missing or not an array")),
    };
    let values = match fields.remove("value") {
        Some(Value::Array(items)) => items,
        _ => return Err(schema(format!("{name}.value"), "missing or not an array")),
    };
    if let Some(extra) = fields.keys().next() {
        return Err(schema(format!("{name}.{extra}"), "unexpected field"));
    }

    let times = times
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = || format!("{name}.time[{i}]");
            let text = v.as_str().ok_or_else(|| schema(path(), "timestamp must be a string"))?;
            parse_timestamp(text, opts.fallback_offset_minutes).map_err(|source| ModelError::Timestamp { path: path(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let values = match kind {
        ValueKind::Numeric => Values::Numeric(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| v.as_f64().ok_or_else(|| schema(format!("{name}.value[{i}]"), "expected a number")))
                .collect::<Result<_, _>>()?,
        ),
        ValueKind::Categorical => Values::Categorical(
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Value::String(s) => Ok(s),
                    _ => Err(schema(format!("{name}.value[{i}]"), "expected a string")),
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    Ok(Signal { times, values })
}

/// Decodes a document and enforces every record invariant.
pub fn read_subject(bytes: &[u8], opts: &ReadOptions) -> Result<SubjectRecord, ModelError> {
    let record = decode_subject(bytes, opts)?;
    if let Some(v) = record.violations().into_iter().next() {
        return Err(schema(v.key.unwrap_or_else(|| "$".into()), v.message));
    }
    Ok(record)
}

struct CanonicalRecord<'a>(&'a SubjectRecord);
struct CanonicalSignal<'a>(&'a Signal);
struct TimeArray<'a>(&'a [TimedInstant], &'a [usize]);
struct ValueArray<'a>(&'a Values, &'a [usize]);

impl Serialize for CanonicalRecord<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.0;
        let mut map = s.serialize_map(Some(r.signals.len() + 2))?;
        map.serialize_entry(UNIQUE_ID_FIELD, &r.unique_id)?;
        for (key, signal) in &r.signals {
            map.serialize_entry(key.as_str(), &CanonicalSignal(signal))?;
        }
        let meta: BTreeMap<&str, &SignalMetadata> = r.metadata.iter().map(|(k, m)| (k.as_str(), m)).collect();
        map.serialize_entry(METADATA_FIELD, &meta)?;
        map.end()
    }
}

impl Serialize for CanonicalSignal<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let sig = self.0;
        let mut order: Vec<usize> = (0..sig.times.len()).collect();
        order.sort_by_key(|&i| sig.times[i].epoch_millis());
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("time", &TimeArray(&sig.times, &order))?;
        map.serialize_entry("value", &ValueArray(&sig.values, &order))?;
        map.end()
    }
}

impl Serialize for TimeArray<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.1.len()))?;
        for &i in self.1 {
            seq.serialize_element(&format_timestamp(&self.0[i]))?;
        }
        seq.end()
    }
}

impl Serialize for ValueArray<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.1.len()))?;
        for &i in self.1 {
            match self.0 {
                Values::Numeric(v) => seq.serialize_element(&v[i])?,
                Values::Categorical(v) => seq.serialize_element(&v[i])?,
            }
        }
        seq.end()
    }
}

/// Canonical encoding: `unique_id`, signals in key order, then `metadata`;
/// two-space indentation; each signal sorted by time; trailing newline.
pub fn write_subject(record: &SubjectRecord) -> Result<String, ModelError> {
    record.check_invariants()?;
    let mut out = serde_json::to_string_pretty(&CanonicalRecord(record))
        .map_err(|e| ModelError::InvariantViolation(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

const FILE_PREFIX: &str = "subj_";
const FILE_SUFFIX: &str = ".json";

fn valid_component(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Splits `subj_<trial>_<id>.json` into `(trial, id)`.
pub fn parse_subject_filename(name: &str) -> Result<(String, String), ModelError> {
    let bad = || ModelError::BadFilename(name.to_owned());
    let stem = name
        .strip_prefix(FILE_PREFIX)
        .and_then(|s| s.strip_suffix(FILE_SUFFIX))
        .ok_or_else(bad)?;
    let (trial, id) = stem.split_once('_').ok_or_else(bad)?;
    if valid_component(trial) && valid_component(id) {
        Ok((trial.to_owned(), id.to_owned()))
    } else {
        Err(bad())
    }
}

pub fn format_subject_filename(trial: &str, subject_id: &str) -> Result<String, ModelError> {
    if !valid_component(trial) {
        return Err(ModelError::BadComponent(format!(
            "trial {trial:?} must be non-empty letters, digits or '-'"
        )));
    }
    if !valid_component(subject_id) {
        return Err(ModelError::BadComponent(format!(
            "subject id {subject_id:?} must be non-empty letters, digits or '-'"
        )));
    }
    Ok(format!("{FILE_PREFIX}{trial}_{subject_id}{FILE_SUFFIX}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "unique_id": "MyTrial-001",
  "cgm": {
    "time": [
      "2021-03-05 14:30:00 +00:00",
      "2021-03-05 14:35:00 +00:00"
    ],
    "value": [
      101.0,
      99.5
    ]
  },
  "metadata": {
    "cgm": {
      "unit": "mg/dL",
      "description": "CGM values"
    }
  }
}
"#;

    fn opts() -> ReadOptions {
        ReadOptions::default()
    }

    fn key(s: &str) -> SignalKey {
        SignalKey::new(s).unwrap()
    }

    fn at(s: &str) -> TimedInstant {
        parse_timestamp(s, 0).unwrap()
    }

    #[test]
    fn minimal_document() {
        let r = read_subject(MINIMAL.as_bytes(), &opts()).unwrap();
        assert_eq!(r.signals.len(), 1);
        assert_eq!(r.cgm().unwrap().values.as_numeric().unwrap(), &[101.0, 99.5]);
    }

    #[test]
    fn canonical_fixed_point() {
        let r = read_subject(MINIMAL.as_bytes(), &opts()).unwrap();
        assert_eq!(write_subject(&r).unwrap(), MINIMAL);
    }

    #[test]
    fn length_mismatch_is_reported_at_key() {
        let doc = MINIMAL.replace("99.5\n", "99.5, 98.0\n");
        match read_subject(doc.as_bytes(), &opts()) {
            Err(ModelError::SchemaViolation { path, .. }) => assert_eq!(path, "cgm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_carb_category() {
        let doc = r#"{"unique_id":"a",
            "cgm":{"time":["2021-01-01 00:00:00"],"value":[100]},
            "carb_category":{"time":["2021-01-01 00:00:00"],"value":["Huge"]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"CGM values"},
                        "carb_category":{"unit":"category","description":"meal"}}}"#;
        match read_subject(doc.as_bytes(), &opts()) {
            Err(ModelError::SchemaViolation { path, .. }) => assert_eq!(path, "carb_category"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_cgm_and_metadata() {
        let doc = r#"{"unique_id":"a","bolus":{"time":[],"value":[]},"metadata":{}}"#;
        assert!(matches!(
            read_subject(doc.as_bytes(), &opts()),
            Err(ModelError::SchemaViolation { .. })
        ));
        let decoded = decode_subject(doc.as_bytes(), &opts()).unwrap();
        let v = decoded.violations();
        assert!(v.iter().any(|v| v.key.as_deref() == Some("cgm")));
        assert!(v.iter().any(|v| v.key.as_deref() == Some("bolus")));
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(
            decode_subject(b"not json", &opts()),
            Err(ModelError::MalformedDocument(_))
        ));
        let bad_time = MINIMAL.replace("2021-03-05 14:35:00 +00:00", "2021-13-05 14:35:00");
        match decode_subject(bad_time.as_bytes(), &opts()) {
            Err(ModelError::Timestamp { path, .. }) => assert_eq!(path, "cgm.time[1]"),
            other => panic!("{other:?}"),
        }
        let string_value = MINIMAL.replace("101.0", "\"101\"");
        assert!(matches!(
            decode_subject(string_value.as_bytes(), &opts()),
            Err(ModelError::SchemaViolation { .. })
        ));
        let bad_key = MINIMAL.replace("\"unique_id\": \"MyTrial-001\",", "\"unique_id\": \"x\", \"Bad-Key\": {},");
        assert!(matches!(
            decode_subject(bad_key.as_bytes(), &opts()),
            Err(ModelError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn lexicographic_key_order() {
        let mut r = SubjectRecord::new("x");
        let t = vec![at("2021-01-01 00:00:00 +00:00")];
        r.insert(
            key(SMBG),
            Signal::numeric(t.clone(), vec![120.0]).unwrap(),
            SignalMetadata::canonical(SMBG).unwrap(),
        );
        r.insert(
            key(CGM),
            Signal::numeric(t, vec![110.0]).unwrap(),
            SignalMetadata::canonical(CGM).unwrap(),
        );
        let doc = write_subject(&r).unwrap();
        let cgm = doc.find("\"cgm\"").unwrap();
        let smbg = doc.find("\"smbg\"").unwrap();
        let meta = doc.find("\"metadata\"").unwrap();
        assert!(doc.find("\"unique_id\"").unwrap() < cgm);
        assert!(cgm < smbg && smbg < meta);
    }

    #[test]
    fn zone_aware_rendering_and_sorting() {
        let mut r = SubjectRecord::new("x");
        let times = vec![at("2021-03-05T15:30:00+00:00"), at("2021-03-05T14:30:00+00:00")];
        r.insert(
            key(CGM),
            Signal::numeric(times, vec![2.0 * 60.0, 100.0]).unwrap(),
            SignalMetadata::canonical(CGM).unwrap(),
        );
        let doc = write_subject(&r).unwrap();
        assert!(doc.contains("\"2021-03-05 14:30:00 +00:00\""));
        let back = read_subject(doc.as_bytes(), &opts()).unwrap();
        assert_eq!(back.cgm().unwrap().values.as_numeric().unwrap(), &[100.0, 120.0]);
    }

    #[test]
    fn extension_keys_survive() {
        let doc = r#"{"unique_id":"a",
            "cgm":{"time":["2021-01-01 00:00:00"],"value":[100]},
            "glp1":{"time":["2021-01-01 08:00:00"],"value":[0.25]},
            "mood":{"time":["2021-01-01 08:00:00"],"value":["good"]},
            "metadata":{"cgm":{"unit":"mg/dL","description":"CGM values","sensor_gen":7},
                        "glp1":{"unit":"mg","description":"GLP-1 dose","medication":"semaglutide"},
                        "mood":{"unit":"label","description":"self report","precision":"categorical"}}}"#;
        let r = read_subject(doc.as_bytes(), &opts()).unwrap();
        assert_eq!(r.signal("mood").unwrap().values.kind(), ValueKind::Categorical);
        assert_eq!(r.metadata[CGM].extra["sensor_gen"], serde_json::json!(7));
        let written = write_subject(&r).unwrap();
        assert_eq!(read_subject(written.as_bytes(), &opts()).unwrap(), r);
        assert!(!written.contains("\"2021-01-01 00:00:00 +00:00\""));
    }

    #[test]
    fn write_rejects_inconsistent_record() {
        let mut r = SubjectRecord::new("x");
        r.signals.insert(key(CGM), Signal::empty(ValueKind::Numeric));
        assert!(matches!(write_subject(&r), Err(ModelError::InvariantViolation(_))));
        let mut r = SubjectRecord::new("x");
        r.insert(
            key(CGM),
            Signal {
                times: vec![at("2021-01-01 00:00:00")],
                values: Values::Numeric(vec![]),
            },
            SignalMetadata::canonical(CGM).unwrap(),
        );
        assert!(write_subject(&r).is_err());
    }

    #[test]
    fn signal_constructor_checks() {
        assert!(Signal::numeric(vec![at("2021-01-01 00:00:00")], vec![f64::NAN]).is_err());
        assert!(Signal::numeric(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn key_names() {
        for ok in ["cgm", "glp1", "basal_inj", "heart_rate"] {
            assert!(SignalKey::new(ok).is_ok());
        }
        for bad in ["", "CGM", "1abc", "heart-rate", "metadata", "unique_id", "_x"] {
            assert!(SignalKey::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn filenames() {
        assert_eq!(
            parse_subject_filename("subj_MyTrial_001-001.json").unwrap(),
            ("MyTrial".into(), "001-001".into())
        );
        assert_eq!(
            parse_subject_filename("subj_DCLP3_42.json").unwrap(),
            ("DCLP3".into(), "42".into())
        );
        for bad in ["data.json", "subj_MyTrial.json", "subj__1.json", "subj_A_1.csv", "subj_A_b_c.json"] {
            assert!(matches!(parse_subject_filename(bad), Err(ModelError::BadFilename(_))), "{bad}");
        }
        assert_eq!(
            format_subject_filename("MyTrial", "001-001").unwrap(),
            "subj_MyTrial_001-001.json"
        );
        assert!(matches!(
            format_subject_filename("My_Trial", "1"),
            Err(ModelError::BadComponent(_))
        ));
        assert!(format_subject_filename("", "1").is_err());
    }

    #[test]
    fn carb_category_strings() {
        for c in CarbCategory::ALL {
            assert_eq!(c.as_str().parse::<CarbCategory>().unwrap(), c);
        }
        assert!("ht".parse::<CarbCategory>().is_err());
    }

    #[test]
    fn registry_units() {
        let units: Vec<_> = registry().iter().map(|k| (k.name, k.unit)).collect();
        assert!(units.contains(&(CGM, Some("mg/dL"))));
        assert!(units.contains(&(BASAL_RATE, Some("U/h"))));
        assert!(units.contains(&(HEART_RATE, Some("bps"))));
        assert!(units.contains(&(STEPS, Some("steps per ten seconds"))));
        assert!(registry().windows(2).all(|w| w[0].name < w[1].name));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn record_strategy() -> impl Strategy<Value = SubjectRecord> {
            let instants = prop::collection::vec((0i64..400_000_000_000, any::<bool>()), 0..20);
            let sig = (instants, prop::collection::vec(-1.0e6f64..1.0e6, 20));
            (prop::collection::vec(sig, 1..4), "[A-Za-z0-9-]{1,12}").prop_map(|(sigs, id)| {
                let mut r = SubjectRecord::new(id);
                let names = [CGM, BOLUS, "glp1"];
                for (name, (inst, vals)) in names.iter().zip(sigs) {
                    let times = inst
                        .iter()
                        .map(|&(ms, aware)| TimedInstant::new(ms, if aware { 90 } else { -300 }, aware).unwrap())
                        .collect::<Vec<_>>();
                    let values = vals[..times.len()].to_vec();
                    let meta = SignalMetadata::canonical(name).unwrap_or_else(|| SignalMetadata::new("mg", "ext"));
                    r.insert(key(name), Signal::numeric(times, values).unwrap().sorted(), meta);
                }
                r
            })
        }

        proptest! {
            #[test]
            fn round_trip(r in record_strategy()) {
                let opts = ReadOptions::with_fallback(-300);
                let doc = write_subject(&r).unwrap();
                let back = read_subject(doc.as_bytes(), &opts).unwrap();
                prop_assert_eq!(&back, &r);
                prop_assert_eq!(write_subject(&back).unwrap(), doc);
            }
        }
    }
}
