//! Candle CSV: `open_time_ms,open,high,low,close,volume`, LF line endings,
//! ascending timestamps. Prices are written with the shortest representation
//! that parses back to the same `f64`, so files written here round-trip
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use eventstudy_core::{Candle, PriceSeries, SeriesError};

use crate::error::{io_err, Error, Result};

pub const CANDLE_HEADER: &str = "open_time_ms,open,high,low,close,volume";

pub fn read_candles(reader: impl Read, symbol: &str) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut candles: Vec<Candle> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(i as u64 + 1, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 {
            if rec.iter().collect::<Vec<_>>().join(",") != CANDLE_HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{CANDLE_HEADER}`"),
                });
            }
            continue;
        }
        if rec.len() != 6 {
            return Err(Error::Parse {
                line,
                message: format!("expected 6 fields, found {}", rec.len()),
            });
        }
        let open_time_ms: i64 = rec[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad timestamp `{}`", &rec[0]),
        })?;
        let mut nums = [0.0f64; 5];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = rec[k + 1].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number `{}`", &rec[k + 1]),
            })?;
        }
        let [open, high, low, close, volume] = nums;
        let candle = Candle::new(open_time_ms, open, high, low, close, volume)
            .map_err(|source| Error::InvariantViolation { line, source })?;
        if let Some(prev) = candles.last() {
            if candle.open_time_ms <= prev.open_time_ms {
                return Err(Error::InvariantViolation {
                    line,
                    source: SeriesError::NonMonotonic {
                        index: candles.len(),
                    },
                });
            }
        }
        candles.push(candle);
        lines.push(line);
    }
    PriceSeries::new(symbol, 1, candles).map_err(|source| match source {
        SeriesError::NonMonotonic { index } | SeriesError::MisalignedGap { index } => {
            Error::InvariantViolation {
                line: lines[index],
                source,
            }
        }
        other => Error::Series(other),
    })
}

pub fn format_candles(series: &PriceSeries) -> String {
    let mut out = String::with_capacity(64 * (series.len() + 1));
    out.push_str(CANDLE_HEADER);
    out.push('\n');
    for c in series.candles() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.open_time_ms, c.open, c.high, c.low, c.close, c.volume
        );
    }
    out
}

/// Loads a candle file; the symbol is taken from the file stem.
pub fn load_candles_csv(path: &Path) -> Result<PriceSeries> {
    let symbol = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("UNKNOWN")
        .to_string();
    load_candles_csv_as(path, &symbol)
}

pub fn load_candles_csv_as(path: &Path, symbol: &str) -> Result<PriceSeries> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_candles(file, symbol)
}

pub fn store_candles_csv(series: &PriceSeries, path: &Path) -> Result<()> {
    write_atomic(path, format_candles(series).as_bytes())
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
