use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::metrics::{cohort_aggregate, outcomes_over_time, subject_report, Metric, MetricOptions, WindowSpec};
use diax::timeparse::format_local_date;

fn main() {
    let profile = SyntheticProfile {
        cgm_mean: 120.0,
        cgm_amplitude: 45.0,
        noise_sd: 15.0,
        ..Default::default()
    };
    let opts = MetricOptions::default();
    let record = generate_synthetic(5, 14, 5, &profile).unwrap();

    println!("date        n    mean   cv    gmi   tbr   tir   tar");
    for r in outcomes_over_time(&record, &WindowSpec::ByDay, &opts).unwrap() {
        println!(
            "{}  {:>3}  {:>5.1}  {:>4.1}  {:>4.2}  {:>4.1}  {:>4.1}  {:>4.1}",
            format_local_date(&r.window.start),
            r.n_samples,
            r.mean.unwrap(),
            r.cv_pct.unwrap(),
            r.gmi_pct.unwrap(),
            r.tbr_low_pct.unwrap(),
            r.tir_pct.unwrap(),
            r.tar_high_pct.unwrap()
        );
    }

    let cohort: Vec<_> = (1..=20)
        .map(|seed| subject_report(&generate_synthetic(seed, 14, 5, &profile).unwrap(), &opts).unwrap())
        .collect();
    let agg = cohort_aggregate(&cohort).unwrap();
    for m in [Metric::Tir, Metric::TbrLow, Metric::Cv, Metric::Gmi] {
        let a = agg[&m];
        println!(
            "{m:<12} n={} median={:.2} IQR={:.2}..{:.2}",
            a.n,
            a.median.unwrap(),
            a.q1.unwrap(),
            a.q3.unwrap()
        );
    }
}
