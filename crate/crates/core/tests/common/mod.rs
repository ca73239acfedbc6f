#![allow(dead_code)]

use std::path::PathBuf;

use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::metrics::{agp_profile, outcomes_over_time, MetricOptions, Window, WindowSpec};
use diax::model::SubjectRecord;
use diax::plotout::{parse_metrics, render_agp, render_outcomes, PlotStyle};

pub const GOLDEN_SEED: u64 = 42;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

pub fn golden_record() -> SubjectRecord {
    generate_synthetic(GOLDEN_SEED, 14, 5, &SyntheticProfile::default()).unwrap()
}

pub fn agp_compare_svg() -> String {
    let record = golden_record();
    let cgm = record.cgm().unwrap();
    let start = cgm.times[0];
    let week = |i: i64| {
        let a = start.add_millis(i * 7 * 86_400_000);
        Window::new(a, a.add_millis(7 * 86_400_000)).unwrap()
    };
    let p1 = agp_profile(cgm, &week(0), 15).unwrap();
    let p2 = agp_profile(cgm, &week(1), 15).unwrap();
    let style = PlotStyle {
        labels: vec!["Week 1".into(), "Week 2".into()],
        title: Some("AGP comparison".into()),
        ..Default::default()
    };
    render_agp(&[&p1, &p2], &style).unwrap()
}

pub fn outcomes_svg() -> String {
    let record = golden_record();
    let series = outcomes_over_time(&record, &WindowSpec::ByDay, &MetricOptions::default()).unwrap();
    let style = PlotStyle {
        title: Some("Outcomes over time".into()),
        ..Default::default()
    };
    render_outcomes(&series, &parse_metrics("tir,tar_high,cv").unwrap(), &style).unwrap()
}

/// Compares against the checked-in golden; `UPDATE_GOLDENS=1` rewrites it.
pub fn matches_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        Err(format!("{name} differs from golden at {line}"))
    }
}
