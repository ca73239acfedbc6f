//! Schema and plausibility checks for subject records and dataset
//! directories.
//!
//! Problems never abort validation; each one becomes a [`Finding`]. A report
//! with no `ERROR` findings is passing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    decode_subject, kind_for, parse_subject_filename, CarbCategory, ReadOptions, SubjectRecord, Values,
    BASAL_INJ, BASAL_RATE, BOLUS, CARBS, CARB_CATEGORY, CGM, SMBG,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    // errors
    MissingCgm,
    LengthMismatch,
    MissingMetadata,
    OrphanMetadata,
    EmptyMetadata,
    UnitMismatch,
    BadCategory,
    KindMismatch,
    NonFinite,
    EmptyId,
    Malformed,
    // warnings
    UnsortedTimes,
    ImplausibleValue,
    MixedZoneAwareness,
    NoInsulin,
    BadFilename,
}

impl Code {
    pub fn severity(self) -> Severity {
        match self {
            Code::UnsortedTimes | Code::ImplausibleValue | Code::MixedZoneAwareness | Code::NoInsulin | Code::BadFilename => {
                Severity::Warning
            }
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Code::MissingCgm => "MISSING_CGM",
            Code::LengthMismatch => "LENGTH_MISMATCH",
            Code::MissingMetadata => "MISSING_METADATA",
            Code::OrphanMetadata => "ORPHAN_METADATA",
            Code::EmptyMetadata => "EMPTY_METADATA",
            Code::UnitMismatch => "UNIT_MISMATCH",
            Code::BadCategory => "BAD_CATEGORY",
            Code::KindMismatch => "KIND_MISMATCH",
            Code::NonFinite => "NON_FINITE",
            Code::EmptyId => "EMPTY_ID",
            Code::Malformed => "MALFORMED",
            Code::UnsortedTimes => "UNSORTED_TIMES",
            Code::ImplausibleValue => "IMPLAUSIBLE_VALUE",
            Code::MixedZoneAwareness => "MIXED_ZONE_AWARENESS",
            Code::NoInsulin => "NO_INSULIN",
            Code::BadFilename => "BAD_FILENAME",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: Code,
    pub key: Option<String>,
    pub index: Option<usize>,
    pub message: String,
}

impl Finding {
    pub fn new(code: Code, key: Option<&str>, index: Option<usize>, message: impl Into<String>) -> Self {
        Finding {
            severity: code.severity(),
            code,
            key: key.map(str::to_owned),
            index,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub errors: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    findings: Vec<Finding>,
    counts: Counts,
}

impl ValidationReport {
    pub fn new(findings: Vec<Finding>) -> Self {
        let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
        let counts = Counts {
            errors,
            warnings: findings.len() - errors,
        };
        ValidationReport { findings, counts }
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    pub fn is_passing(&self) -> bool {
        self.counts.errors == 0
    }

    pub fn has(&self, code: Code) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    /// One JSON object per finding, each tagged with `file`.
    pub fn to_json_lines(&self, file: &str) -> String {
        let mut out = String::new();
        for f in &self.findings {
            let line = FindingLine {
                file: file.to_owned(),
                severity: f.severity,
                code: f.code,
                key: f.key.clone(),
                index: f.index,
                message: f.message.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("finding serializes"));
            out.push('\n');
        }
        out
    }
}

/// Wire form of one finding in the JSON-lines export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindingLine {
    pub file: String,
    pub severity: Severity,
    pub code: Code,
    pub key: Option<String>,
    pub index: Option<usize>,
    pub message: String,
}

/// Parses a JSON-lines export back into per-file reports.
pub fn parse_json_lines(text: &str) -> Result<BTreeMap<String, ValidationReport>, serde_json::Error> {
    let mut grouped: BTreeMap<String, Vec<Finding>> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let l: FindingLine = serde_json::from_str(line)?;
        grouped.entry(l.file).or_default().push(Finding {
            severity: l.severity,
            code: l.code,
            key: l.key,
            index: l.index,
            message: l.message,
        });
    }
    Ok(grouped
        .into_iter()
        .map(|(file, f)| (file, ValidationReport::new(f)))
        .collect())
}

/// Plausible physiological range for a key, if one is checked.
pub fn plausible_range(key: &str) -> Option<(f64, f64)> {
    match key {
        CGM | SMBG => Some((10.0, 600.0)),
        BOLUS => Some((0.0, 100.0)),
        BASAL_RATE => Some((0.0, 40.0)),
        CARBS => Some((0.0, 500.0)),
        _ => None,
    }
}

pub fn validate_subject(record: &SubjectRecord) -> ValidationReport {
    let mut out = Vec::new();

    if record.unique_id.is_empty() {
        out.push(Finding::new(Code::EmptyId, None, None, "unique_id is empty"));
    }
    if !record.signals.contains_key(CGM) {
        out.push(Finding::new(Code::MissingCgm, Some(CGM), None, "required signal cgm is missing"));
    }
    if ![BOLUS, BASAL_RATE, BASAL_INJ].iter().any(|k| record.signals.contains_key(*k)) {
        out.push(Finding::new(
            Code::NoInsulin,
            None,
            None,
            "no bolus, basal_rate or basal_inj signal",
        ));
    }

    for (key, signal) in &record.signals {
        let k = key.as_str();
        let meta = record.metadata.get(key);
        match meta {
            None => out.push(Finding::new(Code::MissingMetadata, Some(k), None, "signal has no metadata entry")),
            Some(m) => {
                if let Some(unit) = key.registry_entry().and_then(|e| e.unit) {
                    if m.unit != unit {
                        out.push(Finding::new(
                            Code::UnitMismatch,
                            Some(k),
                            None,
                            format!("unit {:?}, expected {unit:?}", m.unit),
                        ));
                    }
                }
            }
        }

        if signal.times.len() != signal.values.len() {
            out.push(Finding::new(
                Code::LengthMismatch,
                Some(k),
                None,
                format!("{} timestamps but {} values", signal.times.len(), signal.values.len()),
            ));
        }
        let expected = kind_for(k, meta);
        if signal.values.kind() != expected {
            out.push(Finding::new(
                Code::KindMismatch,
                Some(k),
                None,
                format!("expected {expected:?} values"),
            ));
        }

        match &signal.values {
            Values::Numeric(values) => {
                let range = plausible_range(k);
                for (i, &v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        out.push(Finding::new(Code::NonFinite, Some(k), Some(i), "value is not finite"));
                    } else if let Some((lo, hi)) = range {
                        if v < lo || v > hi {
                            out.push(Finding::new(
                                Code::ImplausibleValue,
                                Some(k),
                                Some(i),
                                format!("{v} outside [{lo}, {hi}]"),
                            ));
                        }
                    }
                }
            }
            Values::Categorical(values) if k == CARB_CATEGORY => {
                for (i, v) in values.iter().enumerate() {
                    if let Err(msg) = v.parse::<CarbCategory>() {
                        out.push(Finding::new(Code::BadCategory, Some(k), Some(i), msg));
                    }
                }
            }
            Values::Categorical(_) => {}
        }

        if let Some(i) = signal
            .times
            .windows(2)
            .position(|w| w[1].epoch_millis() < w[0].epoch_millis())
        {
            out.push(Finding::new(
                Code::UnsortedTimes,
                Some(k),
                Some(i + 1),
                "timestamp earlier than its predecessor",
            ));
        }
        let aware = signal.times.iter().filter(|t| t.is_zone_aware()).count();
        if aware != 0 && aware != signal.times.len() {
            out.push(Finding::new(
                Code::MixedZoneAwareness,
                Some(k),
                None,
                format!("{aware} of {} timestamps carry an offset", signal.times.len()),
            ));
        }
    }

    for (key, m) in &record.metadata {
        if m.unit.is_empty() || m.description.is_empty() {
            out.push(Finding::new(
                Code::EmptyMetadata,
                Some(key.as_str()),
                None,
                "metadata unit and description must be non-empty",
            ));
        }
        if !record.signals.contains_key(key) {
            out.push(Finding::new(
                Code::OrphanMetadata,
                Some(key.as_str()),
                None,
                "metadata entry without a signal",
            ));
        }
    }

    ValidationReport::new(out)
}

/// Hours between the first and last cgm sample.
pub fn cgm_span_hours(record: &SubjectRecord) -> f64 {
    record
        .cgm()
        .and_then(|s| s.span())
        .map(|(a, b)| (b.epoch_millis() - a.epoch_millis()) as f64 / 3_600_000.0)
        .unwrap_or(0.0)
}

/// Decodes and validates one document. Decoding failures become a single
/// `MALFORMED` error.
pub fn validate_bytes(bytes: &[u8], opts: &ReadOptions) -> (ValidationReport, Option<SubjectRecord>) {
    match decode_subject(bytes, opts) {
        Ok(record) => (validate_subject(&record), Some(record)),
        Err(e) => (
            ValidationReport::new(vec![Finding::new(Code::Malformed, None, None, e.to_string())]),
            None,
        ),
    }
}

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("cannot read {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSummary {
    /// Files following the subject naming convention.
    pub subjects: usize,
    pub passing: usize,
    pub failing: usize,
    /// Sum over subjects of the cgm calendar span, in hours.
    pub patient_hours: f64,
    pub code_totals: BTreeMap<Code, usize>,
    /// Non-JSON entries that were skipped.
    pub ignored: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetValidation {
    pub reports: BTreeMap<String, ValidationReport>,
    pub summary: DatasetSummary,
}

impl DatasetValidation {
    pub fn has_errors(&self) -> bool {
        self.reports.values().any(|r| !r.is_passing())
    }

    pub fn to_json_lines(&self) -> String {
        self.reports.iter().map(|(f, r)| r.to_json_lines(f)).collect()
    }
}

/// Validates every `subj_*.json` file of a directory. Other `.json` files get
/// a `BAD_FILENAME` warning; remaining entries are listed as ignored.
pub fn validate_dataset(dir: &Path, opts: &ReadOptions) -> Result<DatasetValidation, ValidateError> {
    let io_err = |source| ValidateError::IoFailure {
        path: dir.display().to_string(),
        source,
    };
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if entry.file_type().map_err(io_err)?.is_file() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();

    let results: Vec<(String, Option<(ValidationReport, f64)>)> = names
        .into_par_iter()
        .map(|name| {
            if parse_subject_filename(&name).is_ok() {
                let (report, hours) = match std::fs::read(dir.join(&name)) {
                    Ok(bytes) => {
                        let (report, record) = validate_bytes(&bytes, opts);
                        (report, record.as_ref().map_or(0.0, cgm_span_hours))
                    }
                    Err(e) => (
                        ValidationReport::new(vec![Finding::new(Code::Malformed, None, None, e.to_string())]),
                        0.0,
                    ),
                };
                (name, Some((report, hours)))
            } else if name.ends_with(".json") {
                let report = ValidationReport::new(vec![Finding::new(
                    Code::BadFilename,
                    None,
                    None,
                    "expected subj_<trial>_<id>.json",
                )]);
                (name, Some((report, f64::NAN)))
            } else {
                (name, None)
            }
        })
        .collect();

    let mut out = DatasetValidation::default();
    for (name, result) in results {
        let Some((report, hours)) = result else {
            out.summary.ignored.push(name);
            continue;
        };
        if !hours.is_nan() {
            out.summary.subjects += 1;
            out.summary.patient_hours += hours;
            if report.is_passing() {
                out.summary.passing += 1;
            } else {
                out.summary.failing += 1;
            }
        }
        for f in report.findings() {
            *out.summary.code_totals.entry(f.code).or_default() += 1;
        }
        out.reports.insert(name, report);
    }
    Ok(out)
}
