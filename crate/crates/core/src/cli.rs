//! The `diax` command line.
//!
//! Exit codes: 0 on success, 1 when the data is invalid or cannot be
//! processed, 2 on usage errors. Diagnostics go to standard error; data goes
//! to the `--out` file or standard output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::align::{align_preset, align_subject, make_grid, parse_duration, AlignOptions, Policy, Preset};
use crate::convert::{
    convert_tables, generate_synthetic, load_mapping_spec, load_tables, records_to_tables, ConvertOptions, RowPolicy,
    SyntheticProfile,
};
use crate::metrics::{
    agp_profile, cohort_aggregate, cohort_to_csv, outcomes_over_time, reports_to_csv, subject_report, MetricOptions,
    ReportRow, Weighting, Window, WindowSpec,
};
use crate::model::{
    decode_subject, format_subject_filename, parse_subject_filename, read_subject, write_subject, ReadOptions,
    SignalKey, SubjectRecord, Values,
};
use crate::plotout::{parse_metrics, render_agp, render_outcomes, PlotStyle};
use crate::timeparse::{format_timestamp, parse_offset, parse_timestamp, TimedInstant};
use crate::validate::{cgm_span_hours, validate_bytes, validate_dataset, Severity};

#[derive(Debug, Parser)]
#[command(name = "diax", version, about = "Standardized diabetes time-series toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Offset for timestamps without zone information, e.g. -05:00
    #[arg(long, global = true, default_value = "+00:00", allow_hyphen_values = true)]
    fallback_offset: String,
    /// Fail on the first malformed row or unknown key (default)
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Skip malformed rows and unknown keys with a warning
    #[arg(long, global = true)]
    lenient: bool,
    /// Worker threads for per-subject work
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a subject file or a directory of subject files
    Validate {
        path: PathBuf,
        /// Write findings as JSON lines
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Convert CSV exports into subject files using a mapping spec
    Convert {
        #[arg(long)]
        spec: PathBuf,
        /// Directory of CSV tables, each named after its file stem
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory for subj_*.json files
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic subjects
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u32,
        #[arg(long, default_value_t = 14)]
        days: u32,
        /// Sampling step in minutes (1, 5 or 15)
        #[arg(long, default_value_t = 5)]
        step: u32,
        #[arg(long, default_value = "SYN")]
        trial: String,
        /// Write long CSV tables (one per signal) instead of subject files
        #[arg(long)]
        tables: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample one subject onto a uniform grid
    Align {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        end: Option<String>,
        /// Grid step for the custom preset, e.g. 5m
        #[arg(long)]
        step: Option<String>,
        #[arg(long, default_value = "custom")]
        preset: String,
        /// Per-signal policy, e.g. cgm=linear:30m (repeatable)
        #[arg(long)]
        policy: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Glycemic metrics per window
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// day | week | custom:<start>:<end> | rolling:<length>:<stride>
        #[arg(long, default_value = "day")]
        slice: String,
        /// count | duration
        #[arg(long, default_value = "count")]
        weighting: String,
        /// Sampling period for wear time; median gap by default
        #[arg(long)]
        nominal_period: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-metric cohort statistics over whole-span reports
        #[arg(long)]
        cohort: Option<PathBuf>,
    },
    /// AGP percentile profile as CSV
    Agp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "15m")]
        bin: String,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        end: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// AGP figure, optionally comparing two weeks
    AgpPlot {
        #[arg(long = "in")]
        input: PathBuf,
        /// One or two week start dates, e.g. 2021-03-01,2021-03-08
        #[arg(long, value_delimiter = ',')]
        weeks: Vec<String>,
        #[arg(long, default_value = "15m")]
        bin: String,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics over time figure
    OutcomesPlot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "day")]
        slice: String,
        #[arg(long, default_value = "tir")]
        metrics: String,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary of one subject file
    Info { path: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn data(msg: impl Into<String>) -> Failure {
    Failure::Data(msg.into())
}

struct Config {
    fallback: i32,
    lenient: bool,
}

impl Config {
    fn read_opts(&self) -> ReadOptions {
        ReadOptions::with_fallback(self.fallback)
    }

    fn timestamp(&self, text: &str) -> Result<TimedInstant, Failure> {
        parse_timestamp(text, self.fallback).map_err(|e| usage(e.to_string()))
    }
}

/// Runs the command line and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let fallback = match parse_offset(&cli.global.fallback_offset) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: --fallback-offset: {e}");
            return 2;
        }
    };
    let config = Config {
        fallback,
        lenient: cli.global.lenient,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        pool = pool.num_threads(usize::from(n));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| run(cli.command, &config)) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn run(command: Command, cfg: &Config) -> Outcome {
    match command {
        Command::Validate { path, report } => cmd_validate(&path, report.as_deref(), cfg),
        Command::Convert { spec, input, out } => cmd_convert(&spec, &input, &out, cfg),
        Command::Synth {
            seed,
            count,
            days,
            step,
            trial,
            tables,
            out,
        } => cmd_synth(seed, count, days, step, &trial, tables, &out),
        Command::Align {
            input,
            start,
            end,
            step,
            preset,
            policy,
            out,
        } => cmd_align(&input, start.as_deref(), end.as_deref(), step.as_deref(), &preset, &policy, out.as_deref(), cfg),
        Command::Metrics {
            input,
            slice,
            weighting,
            nominal_period,
            out,
            cohort,
        } => cmd_metrics(&input, &slice, &weighting, nominal_period.as_deref(), out.as_deref(), cohort.as_deref(), cfg),
        Command::Agp {
            input,
            bin,
            start,
            end,
            out,
        } => cmd_agp(&input, &bin, start.as_deref(), end.as_deref(), out.as_deref(), cfg),
        Command::AgpPlot {
            input,
            weeks,
            bin,
            title,
            out,
        } => cmd_agp_plot(&input, &weeks, &bin, title, out.as_deref(), cfg),
        Command::OutcomesPlot {
            input,
            slice,
            metrics,
            title,
            out,
        } => cmd_outcomes_plot(&input, &slice, &metrics, title, out.as_deref(), cfg),
        Command::Info { path } => cmd_info(&path, cfg),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Outcome {
    match out {
        Some(p) if p != Path::new("-") => {
            std::fs::write(p, content).map_err(|e| data(format!("cannot write {}: {e}", p.display())))
        }
        _ => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(content.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(data(format!("cannot write output: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| data(format!("cannot read {}: {e}", path.display())))
}

/// Loads a record; lenient mode skips the invariant checks.
fn load_record(path: &Path, cfg: &Config) -> Result<SubjectRecord, Failure> {
    let bytes = read_file(path)?;
    let decoded = if cfg.lenient {
        decode_subject(&bytes, &cfg.read_opts())
    } else {
        read_subject(&bytes, &cfg.read_opts())
    };
    decoded.map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Subject files of a directory in name order, or the single file given.
fn subject_files(input: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !input.is_dir() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    let entries = std::fs::read_dir(input).map_err(|e| data(format!("cannot read {}: {e}", input.display())))?;
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if parse_subject_filename(&name).is_ok() {
            files.push(entry.path());
        } else {
            eprintln!("note: ignoring {name}");
        }
    }
    files.sort();
    Ok(files)
}

fn cmd_validate(path: &Path, report: Option<&Path>, cfg: &Config) -> Outcome {
    let (lines, failing) = if path.is_dir() {
        let result = validate_dataset(path, &cfg.read_opts()).map_err(|e| data(e.to_string()))?;
        let s = &result.summary;
        for name in &s.ignored {
            eprintln!("note: ignoring {name}");
        }
        for (file, r) in &result.reports {
            for f in r.findings().iter().filter(|f| f.severity == Severity::Error) {
                eprintln!("{file}: {} {}", f.code, f.message);
            }
        }
        let totals: Vec<String> = s.code_totals.iter().map(|(c, n)| format!("{c}={n}")).collect();
        eprintln!(
            "{} subjects, {} passing, {} failing, {:.1} patient-hours{}{}",
            s.subjects,
            s.passing,
            s.failing,
            s.patient_hours,
            if totals.is_empty() { "" } else { "; " },
            totals.join(" ")
        );
        (result.to_json_lines(), result.has_errors())
    } else {
        let bytes = read_file(path)?;
        let (r, _) = validate_bytes(&bytes, &cfg.read_opts());
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        for f in r.findings() {
            eprintln!("{name}: {} {}", f.code, f.message);
        }
        let c = r.counts();
        eprintln!("{} errors, {} warnings", c.errors, c.warnings);
        (r.to_json_lines(&name), !r.is_passing())
    };
    if let Some(p) = report {
        emit(Some(p), &lines)?;
    }
    if failing {
        Err(data("validation failed"))
    } else {
        Ok(())
    }
}

fn cmd_convert(spec: &Path, input: &Path, out: &Path, cfg: &Config) -> Outcome {
    let text = std::fs::read_to_string(spec).map_err(|e| data(format!("cannot read {}: {e}", spec.display())))?;
    let spec = load_mapping_spec(&text).map_err(|e| data(e.to_string()))?;
    let tables = load_tables(input).map_err(|e| data(e.to_string()))?;
    let opts = ConvertOptions {
        fallback_offset_minutes: cfg.fallback,
        row_policy: if cfg.lenient { RowPolicy::Skip } else { RowPolicy::Fail },
    };
    let conversion = match convert_tables(&tables, &spec, &opts) {
        Ok(c) => c,
        Err(crate::convert::ConvertError::Rows(rows)) => {
            for r in &rows {
                eprintln!("{}:{} column {}: {}", r.table, r.row, r.column, r.message);
            }
            return Err(data(format!("{} bad rows (use --lenient to skip them)", rows.len())));
        }
        Err(e) => return Err(data(e.to_string())),
    };
    for w in &conversion.log.warnings {
        eprintln!("warning: {w}");
    }
    for r in &conversion.log.skipped {
        eprintln!("skipped {}:{} column {}: {}", r.table, r.row, r.column, r.message);
    }
    std::fs::create_dir_all(out).map_err(|e| data(format!("cannot create {}: {e}", out.display())))?;
    for subject in &conversion.subjects {
        let name = subject.filename(&spec.trial_name).map_err(|e| data(e.to_string()))?;
        let doc = write_subject(&subject.record).map_err(|e| data(e.to_string()))?;
        emit(Some(&out.join(name)), &doc)?;
    }
    eprintln!("wrote {} subjects to {}", conversion.subjects.len(), out.display());
    Ok(())
}

fn cmd_synth(seed: u64, count: u32, days: u32, step: u32, trial: &str, tables: bool, out: &Path) -> Outcome {
    if count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let profile = SyntheticProfile::default();
    let records: Vec<(String, SubjectRecord)> = (0..u64::from(count))
        .into_par_iter()
        .map(|i| {
            let s = seed + i;
            generate_synthetic(s, days, step, &profile).map(|r| (format!("{s:04}"), r))
        })
        .collect::<Result<_, _>>()
        .map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(out).map_err(|e| data(format!("cannot create {}: {e}", out.display())))?;
    if tables {
        for table in records_to_tables(records.iter().map(|(id, r)| (id.as_str(), r))) {
            emit(Some(&out.join(format!("{}.csv", table.name))), &table.to_csv())?;
        }
    } else {
        for (id, record) in &records {
            let name = format_subject_filename(trial, id).map_err(|e| usage(e.to_string()))?;
            let doc = write_subject(record).map_err(|e| data(e.to_string()))?;
            emit(Some(&out.join(name)), &doc)?;
        }
    }
    eprintln!("wrote {count} synthetic subjects to {}", out.display());
    Ok(())
}

fn cgm_span(record: &SubjectRecord) -> Result<(TimedInstant, TimedInstant), Failure> {
    record
        .cgm()
        .and_then(|s| s.span())
        .ok_or_else(|| data("record has no cgm samples"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_align(
    input: &Path,
    start: Option<&str>,
    end: Option<&str>,
    step: Option<&str>,
    preset: &str,
    policies: &[String],
    out: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let record = load_record(input, cfg)?;
    let preset: Option<Preset> = match preset {
        "custom" => None,
        other => Some(other.parse().map_err(|_| usage(format!("unknown preset {other:?}")))?),
    };
    if preset.is_some() && (step.is_some() || !policies.is_empty()) {
        return Err(usage("--step and --policy only apply to --preset custom"));
    }
    let step_s = match (preset, step) {
        (Some(p), _) => p.step_seconds(),
        (None, Some(s)) => parse_duration(s).map_err(|e| usage(e.to_string()))?,
        (None, None) => 300,
    };
    let (first, last) = match (start, end) {
        (Some(_), Some(_)) => (None, None),
        _ => {
            let (a, b) = cgm_span(&record)?;
            (Some(a), Some(b.add_millis(step_s * 1000)))
        }
    };
    let start = match start {
        Some(s) => cfg.timestamp(s)?,
        None => first.expect("span computed"),
    };
    let end = match end {
        Some(s) => cfg.timestamp(s)?,
        None => last.expect("span computed"),
    };

    let frame = match preset {
        Some(p) => align_preset(&record, start, end, p),
        None => {
            let mut map = BTreeMap::new();
            for p in policies {
                let (key, rule) = p
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--policy {p:?}: expected key=policy")))?;
                let key = SignalKey::new(key).map_err(|e| usage(e.to_string()))?;
                let rule: Policy = rule.parse().map_err(|e: crate::align::AlignError| usage(e.to_string()))?;
                map.insert(key, rule);
            }
            let grid = make_grid(start, end, step_s).map_err(|e| usage(e.to_string()))?;
            let opts = AlignOptions {
                default_policies: true,
                strict: !cfg.lenient,
            };
            align_subject(&record, &grid, &map, &opts)
        }
    }
    .map_err(|e| data(e.to_string()))?;
    for w in &frame.warnings {
        eprintln!("warning: {w}");
    }
    emit(out, &frame.to_csv())
}

fn parse_slice(text: &str, cfg: &Config) -> Result<WindowSpec, Failure> {
    let bad = || usage(format!("--slice {text:?}: expected day, week, custom:<start>:<end> or rolling:<len>:<stride>"));
    match text {
        "day" => return Ok(WindowSpec::ByDay),
        "week" => return Ok(WindowSpec::ByWeek),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("rolling:") {
        let (len, stride) = rest.split_once(':').ok_or_else(bad)?;
        return Ok(WindowSpec::Rolling {
            length_seconds: parse_duration(len).map_err(|_| bad())?,
            stride_seconds: parse_duration(stride).map_err(|_| bad())?,
        });
    }
    let rest = text.strip_prefix("custom:").ok_or_else(bad)?;
    // timestamps contain colons: take the first split where both halves parse
    for (i, _) in rest.match_indices(':') {
        if let (Ok(start), Ok(end)) = (
            parse_timestamp(&rest[..i], cfg.fallback),
            parse_timestamp(&rest[i + 1..], cfg.fallback),
        ) {
            if start.epoch_millis() >= end.epoch_millis() {
                return Err(usage("custom slice start must precede its end"));
            }
            return Ok(WindowSpec::Custom { start, end });
        }
    }
    Err(bad())
}

fn metric_options(weighting: &str, nominal: Option<&str>) -> Result<MetricOptions, Failure> {
    let weighting = match weighting {
        "count" => Weighting::SampleCount,
        "duration" => Weighting::Duration,
        other => return Err(usage(format!("--weighting {other:?}: expected count or duration"))),
    };
    let nominal_period_seconds = nominal
        .map(|n| parse_duration(n).map(|s| s as f64))
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    Ok(MetricOptions {
        weighting,
        nominal_period_seconds,
        ..Default::default()
    })
}

fn cmd_metrics(
    input: &Path,
    slice: &str,
    weighting: &str,
    nominal: Option<&str>,
    out: Option<&Path>,
    cohort: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let spec = parse_slice(slice, cfg)?;
    let opts = metric_options(weighting, nominal)?;
    let files = subject_files(input)?;
    if files.is_empty() {
        return Err(data(format!("no subject files in {}", input.display())));
    }
    let results: Vec<_> = files
        .par_iter()
        .map(|path| {
            let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let result = load_record(path, cfg).and_then(|record| {
                let windows = outcomes_over_time(&record, &spec, &opts).map_err(|e| data(e.to_string()))?;
                let whole = subject_report(&record, &opts).map_err(|e| data(e.to_string()))?;
                Ok((record.unique_id, windows, whole))
            });
            (name, result)
        })
        .collect();

    let mut rows = Vec::new();
    let mut whole_reports = Vec::new();
    let mut failed = 0;
    for (file, result) in results {
        match result {
            Ok((subject_id, windows, whole)) => {
                rows.extend(windows.into_iter().map(|report| ReportRow {
                    file: file.clone(),
                    subject_id: subject_id.clone(),
                    report,
                }));
                whole_reports.push(whole);
            }
            Err(Failure::Data(m) | Failure::Usage(m)) => {
                eprintln!("{file}: {m}");
                failed += 1;
            }
        }
    }
    emit(out, &reports_to_csv(&rows))?;
    if let Some(path) = cohort {
        let agg = cohort_aggregate(&whole_reports).map_err(|e| data(e.to_string()))?;
        emit(Some(path), &cohort_to_csv(&agg))?;
    }
    if failed > 0 {
        return Err(data(format!("{failed} of {} subjects could not be processed", files.len())));
    }
    Ok(())
}

fn bin_minutes(text: &str) -> Result<u32, Failure> {
    let s = parse_duration(text).map_err(|e| usage(e.to_string()))?;
    if s % 60 != 0 {
        return Err(usage(format!("--bin {text:?}: must be whole minutes")));
    }
    u32::try_from(s / 60).map_err(|_| usage("--bin too large"))
}

fn whole_window(record: &SubjectRecord) -> Result<Window, Failure> {
    let (a, b) = cgm_span(record)?;
    Window::new(a, b.add_millis(1)).map_err(|e| data(e.to_string()))
}

fn cmd_agp(input: &Path, bin: &str, start: Option<&str>, end: Option<&str>, out: Option<&Path>, cfg: &Config) -> Outcome {
    let bin = bin_minutes(bin)?;
    let record = load_record(input, cfg)?;
    let mut window = whole_window(&record)?;
    if let Some(s) = start {
        window.start = cfg.timestamp(s)?;
    }
    if let Some(e) = end {
        window.end = cfg.timestamp(e)?;
    }
    let window = Window::new(window.start, window.end).map_err(|e| usage(e.to_string()))?;
    let cgm = record.cgm().ok_or_else(|| data("record has no cgm"))?;
    let profile = agp_profile(cgm, &window, bin).map_err(|e| data(e.to_string()))?;
    emit(out, &profile.to_csv())
}

/// Seven days from local midnight of `date`, in the offset of the record's
/// first cgm sample.
fn week_window(date: &str, first: TimedInstant) -> Result<Window, Failure> {
    let day = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| usage(format!("--weeks: bad date {date:?}")))?;
    let midnight_utc = day.and_hms_opt(0, 0, 0).expect("valid time").and_utc().timestamp_millis();
    let start = first.with_epoch_millis(midnight_utc - i64::from(first.offset_minutes()) * 60_000);
    Window::new(start, start.add_millis(7 * 86_400_000)).map_err(|e| usage(e.to_string()))
}

fn cmd_agp_plot(
    input: &Path,
    weeks: &[String],
    bin: &str,
    title: Option<String>,
    out: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let bin = bin_minutes(bin)?;
    if weeks.len() > 2 {
        return Err(usage("--weeks takes one or two dates"));
    }
    let record = load_record(input, cfg)?;
    let cgm = record.cgm().ok_or_else(|| data("record has no cgm"))?;
    let (first, _) = cgm_span(&record)?;
    let windows = if weeks.is_empty() {
        vec![whole_window(&record)?]
    } else {
        weeks.iter().map(|w| week_window(w, first)).collect::<Result<_, _>>()?
    };
    let profiles = windows
        .iter()
        .map(|w| agp_profile(cgm, w, bin).map_err(|e| data(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut style = PlotStyle {
        title,
        ..Default::default()
    };
    if !weeks.is_empty() {
        style.labels = weeks.iter().map(|w| format!("Week of {w}")).collect();
    }
    let svg = render_agp(&profiles.iter().collect::<Vec<_>>(), &style).map_err(|e| data(e.to_string()))?;
    emit(out, &svg)
}

fn cmd_outcomes_plot(
    input: &Path,
    slice: &str,
    metrics: &str,
    title: Option<String>,
    out: Option<&Path>,
    cfg: &Config,
) -> Outcome {
    let spec = parse_slice(slice, cfg)?;
    let metrics = parse_metrics(metrics).map_err(|e| usage(e.to_string()))?;
    let record = load_record(input, cfg)?;
    let series = outcomes_over_time(&record, &spec, &MetricOptions::default()).map_err(|e| data(e.to_string()))?;
    let style = PlotStyle {
        title,
        ..Default::default()
    };
    let svg = render_outcomes(&series, &metrics, &style).map_err(|e| data(e.to_string()))?;
    emit(out, &svg)
}

fn cmd_info(path: &Path, cfg: &Config) -> Outcome {
    let record = load_record(path, cfg)?;
    let mut out = format!("unique_id: {}\n", record.unique_id);
    match record.cgm().and_then(|s| s.span()) {
        Some((a, b)) => out.push_str(&format!("span: {} .. {}\n", format_timestamp(&a), format_timestamp(&b))),
        None => out.push_str("span: none\n"),
    }
    out.push_str(&format!("patient_hours: {:.2}\n", cgm_span_hours(&record)));
    out.push_str("signals:\n");
    for (key, signal) in &record.signals {
        let unit = record.metadata.get(key).map_or("", |m| m.unit.as_str());
        let kind = match signal.values {
            Values::Numeric(_) => "numeric",
            Values::Categorical(_) => "categorical",
        };
        out.push_str(&format!("  {key}: {} samples, {kind}, {unit}\n", signal.len()));
    }
    emit(None, &out)
}
