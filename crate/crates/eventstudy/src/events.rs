//! Event definition files: `id,event_time_rfc3339,label` with an optional
//! trailing `description` column.
//!
//! Timestamps must carry an explicit offset. `tz_shift_minutes` is added to
//! every parsed instant, which lets a file written in one zone be re-read as
//! another (e.g. `-540` treats `...Z` wall-clock times as KST).

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::DateTime;
use eventstudy_core::EventSpec;

use crate::error::{io_err, Error, Result};

pub const EVENTS_HEADER: &str = "id,event_time_rfc3339,label";

/// The six shipped tweet events, timestamps read as UTC.
pub const DOGE_EVENTS_2021: &str = include_str!("../fixtures/doge_events_2021.csv");

pub fn parse_events(reader: impl Read, tz_shift_minutes: i64) -> Result<Vec<EventSpec>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(i as u64 + 1, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 {
            let header: Vec<&str> = rec.iter().collect();
            let ok = header[..header.len().min(3)].join(",") == EVENTS_HEADER
                && (header.len() == 3 || (header.len() == 4 && header[3] == "description"));
            if !ok {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{EVENTS_HEADER}[,description]`"),
                });
            }
            continue;
        }
        if !(3..=4).contains(&rec.len()) {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 or 4 fields, found {}", rec.len()),
            });
        }
        let id: u32 = rec[0].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad id `{}`", &rec[0]),
        })?;
        let time = DateTime::parse_from_rfc3339(rec[1].trim()).map_err(|e| Error::Parse {
            line,
            message: format!("bad RFC 3339 timestamp `{}`: {e}", &rec[1]),
        })?;
        let event_time_ms = time.timestamp_millis() + tz_shift_minutes * 60_000;
        if event_time_ms <= 0 {
            return Err(Error::Parse {
                line,
                message: "event time must be after the epoch".into(),
            });
        }
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        events.push(EventSpec {
            id,
            event_time_ms,
            label: rec[2].trim().to_string(),
            description: rec.get(3).unwrap_or("").trim().to_string(),
        });
    }
    events.sort_by_key(|e| (e.event_time_ms, e.id));
    Ok(events)
}

pub fn load_events(path: &Path, tz_shift_minutes: i64) -> Result<Vec<EventSpec>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_events(file, tz_shift_minutes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    #[test]
    fn shipped_fixture() {
        let events = parse_events(DOGE_EVENTS_2021.as_bytes(), 0).unwrap();
        assert_eq!(events.len(), 6);
        assert_eq!(
            events.iter().map(|e| e.id).collect::<Vec<_>>(),
            [1, 2, 3, 4, 5, 6]
        );
        let e4 = events.iter().find(|e| e.id == 4).unwrap();
        let expected = Utc.with_ymd_and_hms(2021, 5, 11, 8, 13, 0).unwrap();
        assert_eq!(e4.event_time_ms, expected.timestamp_millis());
        assert_eq!(e4.event_time_ms, 1_620_720_780_000);
    }

    #[test]
    fn tz_shift_reinterprets() {
        let utc = parse_events(DOGE_EVENTS_2021.as_bytes(), 0).unwrap();
        let kst = parse_events(DOGE_EVENTS_2021.as_bytes(), -540).unwrap();
        for (a, b) in utc.iter().zip(&kst) {
            assert_eq!(a.event_time_ms - b.event_time_ms, 9 * 3_600_000);
        }
        let text = "id,event_time_rfc3339,label\n4,2021-05-11T08:13:00+09:00,poll\n";
        let e = parse_events(text.as_bytes(), 0).unwrap();
        assert_eq!(e[0].event_time_ms, kst[3].event_time_ms);
    }

    #[test]
    fn empty_inputs() {
        assert!(parse_events(&b""[..], 0).unwrap().is_empty());
        assert!(parse_events(format!("{EVENTS_HEADER}\n").as_bytes(), 0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut rows: Vec<&str> = DOGE_EVENTS_2021.lines().skip(1).collect();
        rows.reverse();
        let text = format!("{EVENTS_HEADER}\n{}\n", rows.join("\n"));
        assert_eq!(
            parse_events(text.as_bytes(), 0).unwrap(),
            parse_events(DOGE_EVENTS_2021.as_bytes(), 0).unwrap()
        );
    }

    #[test]
    fn rejects_duplicates_and_bad_rows() {
        let dup =
            "id,event_time_rfc3339,label\n1,2021-01-28T20:47:00Z,a\n1,2021-02-04T07:57:00Z,b\n";
        assert!(matches!(
            parse_events(dup.as_bytes(), 0),
            Err(Error::DuplicateId(1))
        ));
        let naive = "id,event_time_rfc3339,label\n1,2021-01-28 20:47,a\n";
        assert!(matches!(
            parse_events(naive.as_bytes(), 0),
            Err(Error::Parse { line: 2, .. })
        ));
        let header = "id,time,label\n";
        assert!(matches!(
            parse_events(header.as_bytes(), 0),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn description_column() {
        let text =
            "id,event_time_rfc3339,label,description\n7,2021-03-01T00:00:00Z,x,longer text\n";
        let e = parse_events(text.as_bytes(), 0).unwrap();
        assert_eq!(e[0].description, "longer text");
    }
}
