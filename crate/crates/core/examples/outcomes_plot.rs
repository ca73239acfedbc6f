use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::metrics::{outcomes_over_time, MetricOptions, WindowSpec};
use diax::plotout::{parse_metrics, render_outcomes, PlotStyle};

fn main() {
    let record = generate_synthetic(42, 14, 5, &SyntheticProfile::default()).unwrap();
    let series = outcomes_over_time(&record, &WindowSpec::ByDay, &MetricOptions::default()).unwrap();
    let metrics = parse_metrics("tir,tar_high,cv").unwrap();
    let style = PlotStyle {
        title: Some("Daily outcomes".into()),
        ..Default::default()
    };
    let svg = render_outcomes(&series, &metrics, &style).unwrap();
    let path = std::env::temp_dir().join("diax-outcomes.svg");
    std::fs::write(&path, svg).unwrap();
    println!("wrote {}", path.display());
}
