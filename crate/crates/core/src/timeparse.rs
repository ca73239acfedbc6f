//! DIAX timestamps.
//!
//! Two textual forms are accepted:
//!
//! ```text
//! YYYY-MM-DD HH:MM:SS[.fff] <offset>    zone-aware, preferred
//! YYYY-MM-DD HH:MM:SS[.fff]             naive, resolved with a fallback offset
//! ```
//!
//! `<offset>` is `±HH:MM`, `±HHMM` or `Z`, optionally preceded by a single
//! space. The ISO `T` date/time separator is accepted too. Fractions are kept
//! to millisecond precision; extra digits are truncated.
//!
//! A naive stamp is resolved to an absolute instant with the caller's fallback
//! offset, but it remembers that it was naive so it can be written back with
//! the same wall-clock digits and no offset suffix.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate, Timelike};
use thiserror::Error;

/// Largest accepted UTC offset, in minutes.
pub const MAX_OFFSET_MINUTES: i32 = 18 * 60;

const MILLIS_PER_MINUTE: i64 = 60_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid timestamp {input:?}: {reason}")]
pub struct TimestampError {
    pub input: String,
    pub reason: String,
}

impl TimestampError {
    fn new(input: &str, reason: impl Into<String>) -> Self {
        TimestampError {
            input: input.to_owned(),
            reason: reason.into(),
        }
    }
}

/// An absolute instant plus the offset it is displayed in.
///
/// Equality is structural (instant, offset and zone-awareness all have to
/// match). Ordering is chronological first; offset and awareness only break
/// ties so that `Ord` stays consistent with `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimedInstant {
    epoch_millis: i64,
    offset_minutes: i32,
    zone_aware: bool,
}

impl TimedInstant {
    /// Builds an instant from UTC epoch milliseconds.
    pub fn new(epoch_millis: i64, offset_minutes: i32, zone_aware: bool) -> Result<Self, TimestampError> {
        check_offset(offset_minutes).map_err(|reason| TimestampError::new(&epoch_millis.to_string(), reason))?;
        Ok(TimedInstant {
            epoch_millis,
            offset_minutes,
            zone_aware,
        })
    }

    /// Zone-aware instant at UTC.
    pub fn utc_millis(epoch_millis: i64) -> Self {
        TimedInstant {
            epoch_millis,
            offset_minutes: 0,
            zone_aware: true,
        }
    }

    pub fn epoch_millis(&self) -> i64 {
        self.epoch_millis
    }

    pub fn epoch_seconds(&self) -> i64 {
        self.epoch_millis.div_euclid(1000)
    }

    pub fn subsec_millis(&self) -> u16 {
        self.epoch_millis.rem_euclid(1000) as u16
    }

    /// Offset in minutes east of UTC. For naive stamps this is the fallback
    /// offset that was applied at parse time.
    pub fn offset_minutes(&self) -> i32 {
        self.offset_minutes
    }

    pub fn is_zone_aware(&self) -> bool {
        self.zone_aware
    }

    /// Milliseconds since the epoch of the local wall clock.
    pub fn local_millis(&self) -> i64 {
        self.epoch_millis + i64::from(self.offset_minutes) * MILLIS_PER_MINUTE
    }

    /// Same offset and awareness, shifted in time.
    pub fn add_millis(&self, delta: i64) -> Self {
        TimedInstant {
            epoch_millis: self.epoch_millis + delta,
            ..*self
        }
    }

    /// Same offset and awareness, at another absolute instant.
    pub fn with_epoch_millis(&self, epoch_millis: i64) -> Self {
        TimedInstant { epoch_millis, ..*self }
    }

    /// Compares by absolute instant only.
    pub fn cmp_instant(&self, other: &Self) -> Ordering {
        self.epoch_millis.cmp(&other.epoch_millis)
    }
}

impl Ord for TimedInstant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.epoch_millis
            .cmp(&other.epoch_millis)
            .then(self.offset_minutes.cmp(&other.offset_minutes))
            .then(self.zone_aware.cmp(&other.zone_aware))
    }
}

impl PartialOrd for TimedInstant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TimedInstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_timestamp(self))
    }
}

fn check_offset(minutes: i32) -> Result<(), String> {
    if minutes.abs() > MAX_OFFSET_MINUTES {
        Err(format!("offset {minutes} min exceeds ±18:00"))
    } else {
        Ok(())
    }
}

/// Byte cursor over the timestamp grammar.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn digits(&mut self, n: usize) -> Option<u32> {
        let end = self.pos + n;
        let chunk = self.bytes.get(self.pos..end)?;
        let mut acc = 0u32;
        for &b in chunk {
            if !b.is_ascii_digit() {
                return None;
            }
            acc = acc * 10 + u32::from(b - b'0');
        }
        self.pos = end;
        Some(acc)
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

/// Parses a DIAX timestamp. Naive input is resolved with
/// `fallback_offset_minutes` and marked as not zone-aware.
pub fn parse_timestamp(text: &str, fallback_offset_minutes: i32) -> Result<TimedInstant, TimestampError> {
    let err = |reason: &str| TimestampError::new(text, reason);
    check_offset(fallback_offset_minutes).map_err(|r| err(&r))?;

    let mut cur = Cursor {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let year = cur.digits(4).ok_or_else(|| err("expected 4-digit year"))?;
    if !cur.eat(b'-') {
        return Err(err("expected '-' after year"));
    }
    let month = cur.digits(2).ok_or_else(|| err("expected 2-digit month"))?;
    if !cur.eat(b'-') {
        return Err(err("expected '-' after month"));
    }
    let day = cur.digits(2).ok_or_else(|| err("expected 2-digit day"))?;
    if !(cur.eat(b' ') || cur.eat(b'T')) {
        return Err(err("expected ' ' or 'T' between date and time"));
    }
    let hour = cur.digits(2).ok_or_else(|| err("expected 2-digit hour"))?;
    if !cur.eat(b':') {
        return Err(err("expected ':' after hour"));
    }
    let minute = cur.digits(2).ok_or_else(|| err("expected 2-digit minute"))?;
    if !cur.eat(b':') {
        return Err(err("expected ':' after minute"));
    }
    let second = cur.digits(2).ok_or_else(|| err("expected 2-digit second"))?;

    let mut millis = 0u32;
    if cur.eat(b'.') {
        let mut count = 0;
        while let Some(b) = cur.peek().filter(u8::is_ascii_digit) {
            if count < 3 {
                millis = millis * 10 + u32::from(b - b'0');
            }
            count += 1;
            cur.pos += 1;
        }
        if count == 0 || count > 9 {
            return Err(err("fraction must have 1 to 9 digits"));
        }
        for _ in count..3 {
            millis *= 10;
        }
    }

    let offset = if cur.done() {
        None
    } else {
        let had_space = cur.eat(b' ');
        if cur.eat(b'Z') {
            Some(0)
        } else {
            let sign = match cur.peek() {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ if had_space => return Err(err("expected offset after space")),
                _ => return Err(err("unexpected trailing characters")),
            };
            cur.pos += 1;
            let oh = cur.digits(2).ok_or_else(|| err("expected 2-digit offset hours"))?;
            cur.eat(b':');
            let om = cur.digits(2).ok_or_else(|| err("expected 2-digit offset minutes"))?;
            if om >= 60 {
                return Err(err("offset minutes out of range"));
            }
            Some(sign * (oh * 60 + om) as i32)
        }
    };
    if !cur.done() {
        return Err(err("unexpected trailing characters"));
    }

    if hour > 23 {
        return Err(err("hour out of range"));
    }
    if minute > 59 {
        return Err(err("minute out of range"));
    }
    if second > 59 {
        return Err(err("second out of range"));
    }
    let date = NaiveDate::from_ymd_opt(year as i32, month, day)
        .ok_or_else(|| err(if (1..=12).contains(&month) { "day out of range" } else { "month out of range" }))?;
    let local = date
        .and_hms_milli_opt(hour, minute, second, millis)
        .ok_or_else(|| err("time out of range"))?
        .and_utc()
        .timestamp_millis();

    let (offset_minutes, zone_aware) = match offset {
        Some(o) => {
            check_offset(o).map_err(|r| err(&r))?;
            (o, true)
        }
        None => (fallback_offset_minutes, false),
    };
    Ok(TimedInstant {
        epoch_millis: local - i64::from(offset_minutes) * MILLIS_PER_MINUTE,
        offset_minutes,
        zone_aware,
    })
}

/// Renders the canonical form: `YYYY-MM-DD HH:MM:SS[.fff][ ±HH:MM]`.
///
/// Naive instants are rendered in their original wall-clock digits and carry
/// no offset suffix.
pub fn format_timestamp(t: &TimedInstant) -> String {
    let mut out = String::with_capacity(26);
    out.push_str(&format_local_datetime(t));
    if t.zone_aware {
        out.push(' ');
        out.push_str(&format_offset(t.offset_minutes));
    }
    out
}

/// Local wall-clock part of [`format_timestamp`].
pub fn format_local_datetime(t: &TimedInstant) -> String {
    let local = DateTime::from_timestamp_millis(t.local_millis())
        .expect("instant within chrono range")
        .naive_utc();
    let mut out = format!(
        "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
        local.year(),
        local.month(),
        local.day(),
        local.hour(),
        local.minute(),
        local.second()
    );
    let ms = t.local_millis().rem_euclid(1000);
    if ms != 0 {
        out.push_str(&format!(".{ms:03}"));
    }
    out
}

/// Local calendar date, `YYYY-MM-DD`.
pub fn format_local_date(t: &TimedInstant) -> String {
    format_local_datetime(t)[..10].to_owned()
}

/// `±HH:MM`.
pub fn format_offset(minutes: i32) -> String {
    let sign = if minutes < 0 { '-' } else { '+' };
    let abs = minutes.abs();
    format!("{sign}{:02}:{:02}", abs / 60, abs % 60)
}

/// Parses a standalone offset (`±HH:MM`, `±HHMM` or `Z`) into minutes.
pub fn parse_offset(text: &str) -> Result<i32, TimestampError> {
    let err = |reason: &str| TimestampError::new(text, reason);
    if text == "Z" {
        return Ok(0);
    }
    let mut cur = Cursor {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let sign = match cur.peek() {
        Some(b'+') => 1,
        Some(b'-') => -1,
        _ => return Err(err("offset must start with '+' or '-'")),
    };
    cur.pos += 1;
    let h = cur.digits(2).ok_or_else(|| err("expected 2-digit hours"))?;
    cur.eat(b':');
    let m = cur.digits(2).ok_or_else(|| err("expected 2-digit minutes"))?;
    if !cur.done() || m >= 60 {
        return Err(err("malformed offset"));
    }
    let minutes = sign * (h * 60 + m) as i32;
    check_offset(minutes).map_err(|r| err(&r))?;
    Ok(minutes)
}
