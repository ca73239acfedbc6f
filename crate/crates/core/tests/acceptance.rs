//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diax::align::{align_preset, integrate_basal, make_grid, resample_signal, Policy, Preset};
use diax::convert::{convert_tables, generate_synthetic, load_mapping_spec, records_to_tables, ConvertOptions, SyntheticProfile};
use diax::metrics::{
    agp_profile, glycemic_summary, outcomes_over_time, subject_report, GlycemicReport, MetricOptions, Window,
    WindowSpec,
};
use diax::model::{
    read_subject, write_subject, CarbCategory, ReadOptions, Signal, SignalKey, SignalMetadata, SubjectRecord,
};
use diax::timeparse::{format_timestamp, parse_timestamp, TimedInstant};
use diax::validate::{validate_bytes, validate_subject};

const MIN: i64 = 60_000;
const DAY: i64 = 1440 * MIN;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn t0() -> TimedInstant {
    parse_timestamp("2021-03-01 00:00:00 +00:00", 0).unwrap()
}

// 1 ------------------------------------------------------------------------

fn random_record(rng: &mut ChaCha8Rng, i: usize) -> SubjectRecord {
    let mut r = SubjectRecord::new(format!("R{i}-{}", rng.random_range(0..1_000_000u32)));
    let base = rng.random_range(0..2_000_000_000i64) * 1000;
    let times = |rng: &mut ChaCha8Rng, n: usize| {
        let mut ms: Vec<i64> = (0..n).map(|_| base + rng.random_range(0..30 * DAY)).collect();
        ms.sort_unstable();
        ms.into_iter()
            .map(|m| {
                let m = if rng.random_bool(0.3) { m - m % 1000 + rng.random_range(0..1000) } else { m - m % 1000 };
                match rng.random_range(0..3) {
                    0 => TimedInstant::new(m, 0, false).unwrap(),
                    1 => TimedInstant::new(m, rng.random_range(-12 * 4..=14 * 4) * 15, true).unwrap(),
                    _ => TimedInstant::new(m, 0, true).unwrap(),
                }
            })
            .collect::<Vec<_>>()
    };
    let keys = ["cgm", "bolus", "basal_rate", "carbs", "smbg", "heart_rate", "steps", "carb_category", "glp1"];
    for (k, key) in keys.iter().enumerate() {
        if k > 0 && rng.random_bool(0.5) {
            continue;
        }
        let n = rng.random_range(0..60);
        let ts = {
            let mut ts = times(rng, n);
            ts.sort_by(|a, b| a.cmp_instant(b));
            ts
        };
        let (signal, mut meta) = match *key {
            "carb_category" => (
                Signal::categorical(
                    ts,
                    (0..n).map(|_| CarbCategory::ALL[rng.random_range(0..5)].as_str().to_owned()).collect(),
                )
                .unwrap(),
                SignalMetadata::canonical(key).unwrap(),
            ),
            "glp1" => (
                Signal::numeric(ts, (0..n).map(|_| rng.random_range(0.0..2.0)).collect()).unwrap(),
                SignalMetadata::new("mg", "GLP-1 agonist dose"),
            ),
            _ => (
                Signal::numeric(ts, (0..n).map(|_| rng.random_range(1.0..300.0)).collect()).unwrap(),
                SignalMetadata::canonical(key).unwrap(),
            ),
        };
        if rng.random_bool(0.5) {
            meta = meta.with_device(format!("Device \"{}\" é", rng.random_range(0..9)));
        }
        if rng.random_bool(0.3) {
            meta.extra.insert("site".into(), serde_json::json!({"arm": rng.random_bool(0.5), "n": n}));
        }
        r.insert(SignalKey::new(*key).unwrap(), signal, meta);
    }
    r
}

fn round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let records: Vec<_> = (0..500).map(|i| random_record(&mut rng, i)).collect();
    let started = Instant::now();
    for (i, r) in records.iter().enumerate() {
        let doc = write_subject(r).map_err(|e| format!("record {i}: {e}"))?;
        let back = read_subject(doc.as_bytes(), &ReadOptions::default()).map_err(|e| format!("record {i}: {e}"))?;
        ensure(&back == r, || format!("record {i}: read(write(r)) != r"))?;
        ensure(write_subject(&back).unwrap() == doc, || format!("record {i}: rewrite differs"))?;
    }
    let took = started.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("500 records identical after read(write(r)), rewrite byte-identical, {:.2} s (limit 10 s)", took.as_secs_f64()))
}

// 2 and 4 -------------------------------------------------------------------

fn varied_profile(seed: u64) -> SyntheticProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    SyntheticProfile {
        cgm_mean: rng.random_range(95.0..175.0),
        cgm_amplitude: rng.random_range(15.0..70.0),
        noise_sd: rng.random_range(4.0..25.0),
        meals_per_day: rng.random_range(2..=5),
        basal_u_per_h: rng.random_range(0.5..1.6),
        ..Default::default()
    }
}

const LONG_TABLE_SPEC: &str = r#"{
  "trial_name": "SYN",
  "subject_id_column": "subject_id",
  "rules": [
    {"target": "cgm", "source_table": "cgm", "time_column": "time", "value_column": "value", "unit_in": "mg/dL",
     "metadata": {"unit": "mg/dL", "description": "CGM values", "device": "Synthetic CGM"}},
    {"target": "bolus", "source_table": "bolus", "time_column": "time", "value_column": "value", "unit_in": "U",
     "metadata": {"unit": "U", "description": "Insulin boluses (meal or correction)"}},
    {"target": "basal_rate", "source_table": "basal_rate", "time_column": "time", "value_column": "value", "unit_in": "U/h",
     "metadata": {"unit": "U/h", "description": "Basal insulin delivery rate"}},
    {"target": "carbs", "source_table": "carbs", "time_column": "time", "value_column": "value", "unit_in": "g",
     "metadata": {"unit": "g", "description": "Carbohydrate intake"}}
  ]
}"#;

/// Band percentages by direct counting over every sample of the signal.
fn band_oracle(cgm: &Signal, w: &Window) -> Option<[f64; 5]> {
    let vals = cgm.values.as_numeric().unwrap();
    let inside: Vec<f64> = cgm
        .times
        .iter()
        .zip(vals)
        .filter(|(t, _)| t.epoch_millis() >= w.start.epoch_millis() && t.epoch_millis() < w.end.epoch_millis())
        .map(|(_, v)| *v)
        .collect();
    if inside.is_empty() {
        return None;
    }
    let pct = |f: &dyn Fn(f64) -> bool| 100.0 * inside.iter().filter(|v| f(**v)).count() as f64 / inside.len() as f64;
    Some([
        pct(&|v| (70.0..=180.0).contains(&v)),
        pct(&|v| v < 70.0),
        pct(&|v| v < 54.0),
        pct(&|v| v > 180.0),
        pct(&|v| v > 250.0),
    ])
}

fn report_bands(r: &GlycemicReport) -> [f64; 5] {
    [r.tir_pct, r.tbr_low_pct, r.tbr_very_low_pct, r.tar_high_pct, r.tar_very_high_pct].map(|v| v.unwrap())
}

fn synthetic_cohort() -> Vec<SubjectRecord> {
    (1..=100u64)
        .map(|seed| generate_synthetic(seed, 14, 5, &varied_profile(seed)).unwrap())
        .collect()
}

fn pipeline(cohort: &[SubjectRecord]) -> Check {
    let ids: Vec<String> = (1..=cohort.len()).map(|i| format!("{i:03}")).collect();
    let tables = records_to_tables(ids.iter().map(String::as_str).zip(cohort));
    let spec = load_mapping_spec(LONG_TABLE_SPEC).map_err(|e| e.to_string())?;
    let conversion = convert_tables(&tables, &spec, &ConvertOptions::default()).map_err(|e| e.to_string())?;
    ensure(conversion.subjects.len() == cohort.len(), || format!("{} subjects converted", conversion.subjects.len()))?;

    let opts = MetricOptions::default();
    let (mut errors, mut windows, mut worst) = (0, 0, 0.0f64);
    let mut bands_seen = [false; 5];
    for (subject, original) in conversion.subjects.iter().zip(cohort) {
        let rec = &subject.record;
        for key in ["cgm", "bolus", "basal_rate", "carbs"] {
            ensure(rec.signals[key] == original.signals[key], || format!("{}: {key} changed in conversion", subject.subject_id))?;
        }
        let doc = write_subject(rec).unwrap();
        let (report, _) = validate_bytes(doc.as_bytes(), &ReadOptions::default());
        errors += report.counts().errors + validate_subject(rec).counts().errors;

        let cgm = rec.cgm().unwrap();
        let mut reports = outcomes_over_time(rec, &WindowSpec::ByDay, &opts).unwrap();
        reports.extend(outcomes_over_time(rec, &WindowSpec::ByWeek, &opts).unwrap());
        reports.push(subject_report(rec, &opts).unwrap());
        for r in &reports {
            let want = band_oracle(cgm, &r.window).ok_or("window without samples")?;
            for (k, (a, b)) in report_bands(r).iter().zip(want).enumerate() {
                worst = worst.max((a - b).abs());
                bands_seen[k] |= b > 0.0;
            }
            windows += 1;
        }
    }
    ensure(errors == 0, || format!("{errors} validation errors"))?;
    ensure(worst <= 1e-9, || format!("max deviation from counting oracle {worst:e}"))?;
    ensure(bands_seen.iter().all(|&b| b), || "some band never populated".into())?;
    Ok(format!(
        "100 subjects converted, 0 errors, {windows} windows x 5 bands match counting oracle (max dev {worst:e}, tol 1e-9)"
    ))
}

fn partition(cohort: &[SubjectRecord]) -> Check {
    let opts = MetricOptions::default();
    let mut fixtures: Vec<SubjectRecord> = cohort.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..200 {
        let mut r = random_record(&mut rng, i);
        if r.cgm().unwrap().is_empty() {
            continue;
        }
        r.sort_signals();
        fixtures.push(r);
    }
    let specs = [
        WindowSpec::ByDay,
        WindowSpec::ByWeek,
        WindowSpec::Rolling {
            length_seconds: 6 * 3600,
            stride_seconds: 2 * 3600,
        },
    ];
    let (mut checked, mut worst) = (0usize, 0.0f64);
    for rec in &fixtures {
        for spec in &specs {
            for r in outcomes_over_time(rec, spec, &opts).unwrap() {
                if r.n_samples == 0 {
                    continue;
                }
                let [tir, tbr, tbr_vl, tar, tar_vh] = report_bands(&r);
                worst = worst.max((tbr + tir + tar - 100.0).abs());
                ensure(tbr_vl <= tbr && tar_vh <= tar, || format!("nesting broken in {}", r.window))?;
                ensure(
                    report_bands(&r).iter().all(|p| (0.0..=100.0).contains(p)),
                    || format!("percentage out of range in {}", r.window),
                )?;
                checked += 1;
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max |tbr+tir+tar-100| = {worst:e}"))?;
    Ok(format!("{checked} windows over {} fixtures, max |tbr+tir+tar-100| = {worst:e} (tol 1e-9)", fixtures.len()))
}

// 3 ------------------------------------------------------------------------

/// Exact basal delivery by walking every breakpoint (sample times and bin
/// edges) inside the grid.
fn breakpoint_integral(times: &[i64], rates: &[f64], start: i64, end: i64, step: i64) -> Vec<f64> {
    let mut cuts: Vec<i64> = (0..).map(|k| start + k * step).take_while(|&c| c < end).collect();
    cuts.push(end);
    cuts.extend(times.iter().copied().filter(|&t| t > start && t < end));
    cuts.sort_unstable();
    cuts.dedup();
    let mut bins = vec![0.0; ((end - start + step - 1) / step) as usize];
    for w in cuts.windows(2) {
        let rate = match times.iter().rposition(|&t| t <= w[0]) {
            Some(i) => rates[i],
            None => 0.0,
        };
        bins[((w[0] - start) / step) as usize] += rate * (w[1] - w[0]) as f64 / 3_600_000.0;
    }
    bins
}

fn conservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut total_u) = (0.0f64, 0.0f64);
    for case in 0..1000 {
        let step = [5, 15, 30, 60][rng.random_range(0..4)] * MIN;
        let start = t0().add_millis(rng.random_range(0..DAY / MIN) * MIN);
        let end = start.add_millis(rng.random_range(1..3 * DAY / MIN) * MIN);
        let grid = make_grid(start, end, step / 1000).unwrap();

        let n = rng.random_range(0..40);
        let mut ms: Vec<i64> = (0..n)
            .map(|_| start.epoch_millis() + rng.random_range(-DAY..4 * DAY) / 1000 * 1000)
            .collect();
        ms.sort_unstable();
        let rates: Vec<f64> = (0..n).map(|_| rng.random_range(0..=100) as f64 * 0.05).collect();
        let basal = Signal::numeric(ms.iter().map(|&m| start.with_epoch_millis(m)).collect(), rates.clone()).unwrap();
        let got = integrate_basal(&basal, &grid).unwrap();
        let want = breakpoint_integral(&ms, &rates, start.epoch_millis(), end.epoch_millis(), step);
        ensure(got.len() == want.len(), || format!("case {case}: bin count"))?;
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        let total: f64 = got.iter().sum();
        worst = worst.max((total - want.iter().sum::<f64>()).abs());
        total_u += total;

        // doses on a 1/32 U lattice: every partial sum is exact in binary
        // floating point, so any lost or double-counted dose shows up
        let m = rng.random_range(0..30);
        let bt: Vec<i64> = (0..m)
            .map(|_| start.epoch_millis() + rng.random_range(-DAY / 2..3 * DAY) / 1000 * 1000)
            .collect();
        let doses: Vec<f64> = (0..m).map(|_| rng.random_range(1..=640) as f64 / 32.0).collect();
        let bolus = Signal::numeric(bt.iter().map(|&t| start.with_epoch_millis(t)).collect(), doses.clone()).unwrap();
        let binned: f64 = resample_signal(&bolus, &grid, Policy::SumIntoBin)
            .unwrap()
            .iter()
            .map(|v| v.unwrap())
            .sum();
        let direct: f64 = bt
            .iter()
            .zip(&doses)
            .filter(|(t, _)| **t >= start.epoch_millis() && **t < end.epoch_millis())
            .map(|(_, d)| d)
            .sum();
        ensure(binned == direct, || format!("case {case}: bolus bins {binned} vs doses {direct}"))?;
    }
    ensure(worst <= 1e-9, || format!("basal deviation {worst:e} U"))?;
    Ok(format!(
        "1000 basal signals ({total_u:.1} U total), max deviation {worst:e} U (tol 1e-9); bolus totals exact"
    ))
}

// 5 ------------------------------------------------------------------------

fn gmi_spot() -> Check {
    let t = t0();
    let cgm = Signal::numeric((0..288).map(|i| t.add_millis(i * 5 * MIN)).collect(), vec![154.0; 288]).unwrap();
    let w = Window::new(t, t.add_millis(DAY)).unwrap();
    let r = glycemic_summary(&cgm, &w, &MetricOptions::default()).unwrap();
    let gmi = r.gmi_pct.unwrap();
    ensure((gmi - 6.994).abs() <= 0.001, || format!("gmi {gmi}"))?;
    ensure(r.cv_pct == Some(0.0), || format!("cv {:?}", r.cv_pct))?;
    Ok(format!("constant 154 mg/dL -> gmi {gmi:.5} (expected 6.994 +/- 0.001), cv 0"))
}

// 6 ------------------------------------------------------------------------

fn oracle_percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    // insertion sort, independent of the library's sort
    let mut s: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        let pos = s.iter().position(|&x| x > v).unwrap_or(s.len());
        s.insert(pos, v);
    }
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    Some(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

fn agp() -> Check {
    let day = generate_synthetic(6, 1, 5, &SyntheticProfile::default()).unwrap();
    let trace = day.cgm().unwrap().values.as_numeric().unwrap().to_vec();
    let t = t0();
    let cgm = Signal::numeric(
        (0..14 * 288).map(|i| t.add_millis(i * 5 * MIN)).collect(),
        (0..14 * 288).map(|i| trace[i as usize % 288]).collect(),
    )
    .unwrap();
    let p = agp_profile(&cgm, &Window::new(t, t.add_millis(14 * DAY)).unwrap(), 5).unwrap();
    ensure(p.n_bins() == 288, || format!("{} bins", p.n_bins()))?;
    for (k, &v) in trace.iter().enumerate() {
        for c in p.curves() {
            let got = c[k].ok_or("missing bin")?;
            ensure((got - v).abs() <= 1e-9, || format!("bin {k}: {got} vs trace {v}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let divisors = [5u32, 10, 15, 20, 30, 60, 120, 180, 240, 360, 720, 1440];
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let bin = divisors[rng.random_range(0..divisors.len())];
        let offset = rng.random_range(-48..=56) * 15;
        let start = TimedInstant::new(t.epoch_millis(), offset, true).unwrap();
        let n = rng.random_range(1..400);
        let mut ms: Vec<i64> = (0..n).map(|_| rng.random_range(0..7 * DAY)).collect();
        ms.sort_unstable();
        let vals: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { 100.0 } else { rng.random_range(40.0..400.0) })
            .collect();
        let cgm = Signal::numeric(ms.iter().map(|&m| start.add_millis(m)).collect(), vals.clone()).unwrap();
        let p = agp_profile(&cgm, &Window::new(start, start.add_millis(7 * DAY)).unwrap(), bin).unwrap();

        let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        for (m, v) in ms.iter().zip(&vals) {
            let local = start.epoch_millis() + m + i64::from(offset) * MIN;
            groups.entry(local.rem_euclid(DAY) / (i64::from(bin) * MIN)).or_default().push(*v);
        }
        for k in 0..p.n_bins() {
            let group = groups.get(&(k as i64)).map_or(&[][..], Vec::as_slice);
            ensure(p.counts[k] == group.len(), || format!("case {case} bin {k}: count"))?;
            let mut prev = f64::NEG_INFINITY;
            for (curve, q) in p.curves().iter().zip([0.05, 0.25, 0.5, 0.75, 0.95]) {
                match (curve[k], oracle_percentile(group, q)) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        worst = worst.max((a - b).abs());
                        ensure(a >= prev, || format!("case {case} bin {k}: percentiles not monotone"))?;
                        prev = a;
                    }
                    (a, b) => return Err(format!("case {case} bin {k}: {a:?} vs {b:?}")),
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation from oracle {worst:e}"))?;
    Ok(format!(
        "14 identical days collapse onto the daily trace (tol 1e-9); 1000 random inputs monotone, max dev from sort oracle {worst:e}"
    ))
}

// 7 ------------------------------------------------------------------------

fn presets() -> Check {
    let t = t0();
    // every 5 min for a day, minus the hour between 10:00 and 11:00
    let idx: Vec<i64> = (0..288).filter(|i| !(121..132).contains(i)).collect();
    let mut rec = SubjectRecord::new("gap");
    rec.insert(
        SignalKey::new("cgm").unwrap(),
        Signal::numeric(
            idx.iter().map(|&i| t.add_millis(i * 5 * MIN)).collect(),
            idx.iter().map(|&i| 100.0 + (i % 17) as f64).collect(),
        )
        .unwrap(),
        SignalMetadata::canonical("cgm").unwrap(),
    );
    let (a, b) = (t.add_millis(6 * 60 * MIN), t.add_millis(14 * 60 * MIN));
    let replay = align_preset(&rec, a, b, Preset::Replay).map_err(|e| e.to_string())?;
    ensure(replay.grid.step_seconds() == 300, || "replay step".into())?;
    ensure(replay.missing_count("cgm") == 0, || format!("replay has {} MISSING", replay.missing_count("cgm")))?;

    let advisor = align_preset(&rec, a, b, Preset::Advisor).map_err(|e| e.to_string())?;
    ensure(advisor.grid.step_seconds() == 900, || "advisor step".into())?;
    let missing: Vec<String> = advisor
        .grid
        .points()
        .zip(&advisor.columns["cgm"])
        .filter(|(_, v)| v.is_none())
        .map(|(p, _)| format_timestamp(&p)[11..16].to_owned())
        .collect();
    ensure(missing == ["10:15", "10:30", "10:45"], || format!("advisor MISSING at {missing:?}"))?;
    Ok(format!(
        "replay: {} points, 0 MISSING; advisor: MISSING exactly at {}",
        replay.grid.len(),
        missing.join(", ")
    ))
}

// 8 ------------------------------------------------------------------------

fn random_stamp(rng: &mut ChaCha8Rng) -> (String, String, i64, bool) {
    let y = rng.random_range(1970..=2100);
    let mo = rng.random_range(1..=12u32);
    let first = NaiveDate::from_ymd_opt(y, mo, 1).unwrap();
    let next = if mo == 12 { NaiveDate::from_ymd_opt(y + 1, 1, 1) } else { NaiveDate::from_ymd_opt(y, mo + 1, 1) }.unwrap();
    let d = rng.random_range(1..=(next - first).num_days() as u32);
    let (h, mi, s) = (rng.random_range(0..24u32), rng.random_range(0..60u32), rng.random_range(0..60u32));
    let digits: String = (0..rng.random_range(0..=9)).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
    let ms: u32 = format!("{digits:0<3}")[..3].parse().unwrap();

    let sep = if rng.random_bool(0.5) { ' ' } else { 'T' };
    let mut raw = format!("{y:04}-{mo:02}-{d:02}{sep}{h:02}:{mi:02}:{s:02}");
    if !digits.is_empty() {
        raw.push('.');
        raw.push_str(&digits);
    }
    let mut canon = format!("{y:04}-{mo:02}-{d:02} {h:02}:{mi:02}:{s:02}");
    if ms != 0 {
        canon.push_str(&format!(".{ms:03}"));
    }
    let offset = match rng.random_range(0..4) {
        0 => None,
        1 => {
            raw.push_str(if rng.random_bool(0.5) { "Z" } else { " Z" });
            Some(0)
        }
        _ => {
            let off: i32 = rng.random_range(-18 * 4..=18 * 4) * 15;
            let (sign, abs) = (if off < 0 { '-' } else { '+' }, off.abs());
            if rng.random_bool(0.5) {
                raw.push(' ');
            }
            if rng.random_bool(0.5) {
                raw.push_str(&format!("{sign}{:02}:{:02}", abs / 60, abs % 60));
            } else {
                raw.push_str(&format!("{sign}{:02}{:02}", abs / 60, abs % 60));
            }
            Some(off)
        }
    };
    let local = NaiveDate::from_ymd_opt(y, mo, d)
        .unwrap()
        .and_hms_milli_opt(h, mi, s, ms)
        .unwrap()
        .and_utc()
        .timestamp_millis();
    let epoch = local - i64::from(offset.unwrap_or(0)) * MIN;
    let aware = offset.is_some();
    if let Some(off) = offset {
        let (sign, abs) = (if off < 0 { '-' } else { '+' }, off.abs());
        canon.push_str(&format!(" {sign}{:02}:{:02}", abs / 60, abs % 60));
    }
    (raw, canon, epoch, aware)
}

fn timestamps() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let naive: Vec<String> = (0..500)
        .map(|_| {
            let m = rng.random_range(0..60 * DAY / 1000) * 1000;
            format_timestamp(&TimedInstant::new(t0().epoch_millis() + m, 0, false).unwrap())
        })
        .collect();
    let order = |stamps: &[String], fallback: i32| {
        let parsed: Vec<TimedInstant> = stamps.iter().map(|s| parse_timestamp(s, fallback).unwrap()).collect();
        let mut idx: Vec<usize> = (0..parsed.len()).collect();
        idx.sort_by(|&a, &b| parsed[a].cmp(&parsed[b]).then(a.cmp(&b)));
        (idx, parsed)
    };
    let aware: Vec<String> = naive.iter().map(|s| format!("{s} -05:00")).collect();
    let (naive_order, naive_parsed) = order(&naive, -300);
    let (aware_order, aware_parsed) = order(&aware, 0);
    ensure(naive_order == aware_order, || "naive and aware orderings differ".into())?;
    ensure(
        naive_parsed.iter().zip(&aware_parsed).all(|(a, b)| a.epoch_millis() == b.epoch_millis()),
        || "naive and aware instants differ".into(),
    )?;

    for i in 0..10_000 {
        let (raw, canon, epoch, aware) = random_stamp(&mut rng);
        let t = parse_timestamp(&raw, -300).map_err(|e| format!("#{i} {raw:?}: {e}"))?;
        let want = if aware { epoch } else { epoch + 300 * MIN };
        ensure(t.epoch_millis() == want, || format!("#{i} {raw:?}: epoch {} vs {want}", t.epoch_millis()))?;
        let text = format_timestamp(&t);
        ensure(text == canon, || format!("#{i} {raw:?}: formatted {text:?}, expected {canon:?}"))?;
        ensure(parse_timestamp(&text, -300).unwrap() == t, || format!("#{i} {raw:?}: reparse differs"))?;
    }
    Ok("500 naive stamps at -05:00 order identically to their aware twins; 10000 grammar strings round-trip".into())
}

// 9 ------------------------------------------------------------------------

fn process(doc: &[u8]) -> usize {
    let (report, record) = validate_bytes(doc, &ReadOptions::default());
    assert!(report.is_passing());
    let record = record.unwrap();
    let opts = MetricOptions::default();
    let days = outcomes_over_time(&record, &WindowSpec::ByDay, &opts).unwrap();
    let weeks = outcomes_over_time(&record, &WindowSpec::ByWeek, &opts).unwrap();
    let whole = subject_report(&record, &opts).unwrap();
    let cgm = record.cgm().unwrap();
    let agp = agp_profile(cgm, &whole.window, 15).unwrap();
    days.len() + weeks.len() + agp.n_bins()
}

fn throughput() -> Check {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let year = generate_synthetic(9, 365, 5, &SyntheticProfile::default()).unwrap();
    let samples = year.cgm().unwrap().len();
    let doc = write_subject(&year).unwrap();
    let started = Instant::now();
    process(doc.as_bytes());
    let one = started.elapsed();
    ensure(one < Duration::from_secs(1), || format!("one subject-year took {one:?}"))?;

    // Generation is excluded from timing. Processing times are summed over
    // subjects, which is at least the wall time on any number of cores.
    let mut busy = Duration::ZERO;
    let mut hours = 0.0;
    for seed in 100..200u64 {
        let rec = generate_synthetic(seed, 365, 5, &SyntheticProfile::default()).unwrap();
        hours += diax::validate::cgm_span_hours(&rec);
        let doc = write_subject(&rec).unwrap();
        let started = Instant::now();
        process(doc.as_bytes());
        busy += started.elapsed();
    }
    ensure(busy < Duration::from_secs(60), || format!("100 subject-years took {busy:?}"))?;
    Ok(format!(
        "1 subject-year ({samples} cgm samples) {:.3} s (limit 1 s); 100 subject-years ({hours:.0} patient-hours) {:.1} s summed single-thread time (limit 60 s; host has {cores} core(s))",
        one.as_secs_f64(),
        busy.as_secs_f64()
    ))
}

// 10 -----------------------------------------------------------------------

fn goldens() -> Check {
    common::matches_golden("agp_compare.svg", &common::agp_compare_svg())?;
    common::matches_golden("outcomes.svg", &common::outcomes_svg())?;
    Ok("agp_compare.svg and outcomes.svg byte-identical to checked-in goldens (verified on this platform only)".into())
}

fn main() {
    let cohort = synthetic_cohort();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("round-trip", Box::new(round_trip)),
        ("pipeline soundness", Box::new(|| pipeline(&cohort))),
        ("conservation", Box::new(conservation)),
        ("band partition", Box::new(|| partition(&cohort))),
        ("GMI spot value", Box::new(gmi_spot)),
        ("AGP degeneracy", Box::new(agp)),
        ("alignment presets", Box::new(presets)),
        ("timestamp semantics", Box::new(timestamps)),
        ("throughput", Box::new(throughput)),
        ("SVG goldens", Box::new(goldens)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
