//! Converts the bundled sample exports with their mapping specs and prints
//! what came out.

use std::path::Path;

use diax::convert::{convert_tables, load_mapping_spec, load_tables, ConvertOptions};
use diax::validate::validate_subject;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    for (spec, data) in [("babelbetes.json", "babelbetes"), ("generic_trial.json", "generic_trial")] {
        let text = std::fs::read_to_string(root.join("specs").join(spec)).unwrap();
        let spec = load_mapping_spec(&text).unwrap();
        let tables = load_tables(&root.join("data").join(data)).unwrap();
        let out = convert_tables(&tables, &spec, &ConvertOptions::default()).unwrap();

        println!("{}: {} subjects", spec.trial_name, out.subjects.len());
        for w in &out.log.warnings {
            println!("  warning: {w}");
        }
        for s in &out.subjects {
            let counts: Vec<String> = s.record.signals.iter().map(|(k, v)| format!("{k}={}", v.len())).collect();
            let report = validate_subject(&s.record);
            println!(
                "  {} [{}] errors={} warnings={}",
                s.filename(&spec.trial_name).unwrap(),
                counts.join(" "),
                report.counts().errors,
                report.counts().warnings
            );
        }
    }
}
