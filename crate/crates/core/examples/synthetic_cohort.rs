//! Generates a small synthetic cohort, writes it to a temporary directory
//! and validates the directory as a dataset.

use diax::convert::{generate_synthetic, SyntheticProfile};
use diax::model::{format_subject_filename, write_subject, ReadOptions};
use diax::validate::validate_dataset;

fn main() {
    let dir = std::env::temp_dir().join("diax-synthetic-cohort");
    std::fs::create_dir_all(&dir).unwrap();
    let profile = SyntheticProfile {
        cgm_mean: 125.0,
        cgm_amplitude: 40.0,
        ..Default::default()
    };
    for seed in 1..=5 {
        let record = generate_synthetic(seed, 14, 5, &profile).unwrap();
        let name = format_subject_filename("SYN", &format!("{seed:03}")).unwrap();
        std::fs::write(dir.join(name), write_subject(&record).unwrap()).unwrap();
    }
    std::fs::write(dir.join("README.txt"), "not a subject file").unwrap();

    let result = validate_dataset(&dir, &ReadOptions::default()).unwrap();
    let s = &result.summary;
    println!("{}", dir.display());
    println!(
        "subjects={} passing={} failing={} patient_hours={:.1} ignored={:?}",
        s.subjects, s.passing, s.failing, s.patient_hours, s.ignored
    );
    print!("{}", result.to_json_lines());
}
