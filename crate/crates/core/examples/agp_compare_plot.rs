//! Two-week AGP comparison figure for one synthetic subject.

use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::metrics::{agp_profile, Window};
use diax::plotout::{render_agp, PlotStyle};

fn main() {
    let record = generate_synthetic(42, 14, 5, &SyntheticProfile::default()).unwrap();
    let cgm = record.cgm().unwrap();
    let start = cgm.times[0];
    let week = |i: i64| {
        let a = start.add_millis(i * 7 * 86_400_000);
        Window::new(a, a.add_millis(7 * 86_400_000)).unwrap()
    };
    let first = agp_profile(cgm, &week(0), 15).unwrap();
    let second = agp_profile(cgm, &week(1), 15).unwrap();

    let style = PlotStyle {
        title: Some("AGP, week 1 vs week 2".into()),
        labels: vec!["Week 1".into(), "Week 2".into()],
        ..Default::default()
    };
    let svg = render_agp(&[&first, &second], &style).unwrap();
    let path = std::env::temp_dir().join("diax-agp-compare.svg");
    std::fs::write(&path, svg).unwrap();
    println!("wrote {}", path.display());
}
