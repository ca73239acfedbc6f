//! Writes a small subject file, reads it back and validates it, then breaks
//! it in a few ways to show the findings.

use diax::model::{read_subject, write_subject, ReadOptions, Signal, SignalKey, SignalMetadata, SubjectRecord};
use diax::timeparse::parse_timestamp;
use diax::validate::validate_bytes;

fn main() {
    let t0 = parse_timestamp("2021-03-01 08:00:00 -05:00", 0).unwrap();
    let times: Vec<_> = (0..6).map(|i| t0.add_millis(i * 300_000)).collect();

    let mut record = SubjectRecord::new("Demo-1");
    record.insert(
        SignalKey::new("cgm").unwrap(),
        Signal::numeric(times.clone(), vec![110.0, 114.0, 121.0, 130.0, 138.0, 141.0]).unwrap(),
        SignalMetadata::canonical("cgm").unwrap().with_device("Dexcom G6"),
    );
    record.insert(
        SignalKey::new("bolus").unwrap(),
        Signal::numeric(vec![times[1]], vec![4.5]).unwrap(),
        SignalMetadata::canonical("bolus").unwrap().with_insulin("Humalog"),
    );

    let doc = write_subject(&record).unwrap();
    println!("{doc}");
    let back = read_subject(doc.as_bytes(), &ReadOptions::default()).unwrap();
    assert_eq!(back, record);

    let broken = [
        ("missing cgm", doc.replace("\"cgm\"", "\"cgm_raw\"")),
        ("wrong unit", doc.replace("\"unit\": \"U\"", "\"unit\": \"mL\"")),
        ("implausible value", doc.replace("141.0", "1410.0")),
        ("not json", doc[..40].to_string()),
    ];
    for (label, text) in broken {
        let (report, _) = validate_bytes(text.as_bytes(), &ReadOptions::default());
        println!("-- {label}");
        for f in report.findings() {
            println!("   {:?} {} {}", f.severity, f.code, f.message);
        }
    }
}
