use diax::timeparse::{format_timestamp, parse_offset, parse_timestamp};

fn main() {
    let fallback = parse_offset("-05:00").unwrap();
    for text in [
        "2021-03-01 08:00:00",
        "2021-03-01 08:00:00 -05:00",
        "2021-03-01T13:00:00.250Z",
        "2021-03-01 08:00",
        "2021-02-30 08:00:00",
    ] {
        match parse_timestamp(text, fallback) {
            Ok(t) => println!(
                "{text:<28} -> {:<32} epoch_ms={} aware={}",
                format_timestamp(&t),
                t.epoch_millis(),
                t.is_zone_aware()
            ),
            Err(e) => println!("{text:<28} -> error: {e}"),
        }
    }
}
