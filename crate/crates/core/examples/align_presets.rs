//! Aligns a synthetic day with a one-hour sensor dropout onto analysis grids.

use std::collections::BTreeMap;

use diax::align::{align_preset, align_subject, integrate_basal, make_grid, AlignOptions, InnerRule, Policy, Preset};
use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::model::{SignalKey, Values};

fn main() {
    let mut record = generate_synthetic(11, 1, 5, &SyntheticProfile::default()).unwrap();
    let start = record.cgm().unwrap().times[0];

    // drop 09:00 to 10:00
    let cgm = record.signals.get_mut("cgm").unwrap();
    let keep: Vec<bool> = cgm.times.iter().map(|t| !(9 * 12 + 1..10 * 12).contains(&((t.epoch_millis() - start.epoch_millis()) / 300_000))).collect();
    let Values::Numeric(v) = &mut cgm.values else { unreachable!() };
    let mut it = keep.iter();
    v.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    cgm.times.retain(|_| *it.next().unwrap());

    let (a, b) = (start.add_millis(8 * 3_600_000), start.add_millis(11 * 3_600_000));
    let replay = align_preset(&record, a, b, Preset::Replay).unwrap();
    let advisor = align_preset(&record, a, b, Preset::Advisor).unwrap();
    println!("replay:  {} points, {} missing cgm", replay.grid.len(), replay.missing_count("cgm"));
    println!("advisor: {} points, {} missing cgm", advisor.grid.len(), advisor.missing_count("cgm"));
    print!("{}", advisor.to_csv());

    let mut policies = BTreeMap::new();
    policies.insert(
        SignalKey::new("cgm").unwrap(),
        Policy::PreserveMissing(InnerRule::Linear { max_gap_seconds: 1800 }),
    );
    let grid = make_grid(a, b, 1800).unwrap();
    let custom = align_subject(&record, &grid, &policies, &AlignOptions::default()).unwrap();
    print!("{}", custom.to_csv());

    let day = make_grid(start, start.add_millis(86_400_000), 3600).unwrap();
    let hourly = integrate_basal(record.signal("basal_rate").unwrap(), &day).unwrap();
    println!("basal delivered over the day: {:.2} U", hourly.iter().sum::<f64>());
}
