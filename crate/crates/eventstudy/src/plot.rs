//! Plot-data files for price charts with event markers.
//!
//! For every series, `<SYMBOL>.csv` holds `timestamp_ms,close,log_return`
//! (the first row has an empty return). `events.csv` holds
//! `event_time_ms,label`; each row is meant to be drawn as a vertical line
//! at the exact event instant, shared by every series panel.

use std::path::{Path, PathBuf};

use eventstudy_core::{log_returns, EventSpec, PriceSeries, SeriesError};

use crate::candles_csv::write_atomic;
use crate::error::{io_err, Error, Result};

fn to_csv(records: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("flush")
}

pub fn series_plot_csv(series: &PriceSeries) -> Result<Vec<u8>> {
    if series.is_empty() {
        return Err(Error::Series(SeriesError::EmptySeries));
    }
    let returns = log_returns(series).ok();
    let header = vec!["timestamp_ms".into(), "close".into(), "log_return".into()];
    let rows = series.candles().iter().enumerate().map(|(i, c)| {
        let r = match (&returns, i) {
            (Some(r), i) if i > 0 => r.points[i - 1].value.to_string(),
            _ => String::new(),
        };
        vec![c.open_time_ms.to_string(), c.close.to_string(), r]
    });
    Ok(to_csv(std::iter::once(header).chain(rows)))
}

pub fn events_plot_csv(events: &[EventSpec]) -> Vec<u8> {
    let mut sorted: Vec<&EventSpec> = events.iter().collect();
    sorted.sort_by_key(|e| (e.event_time_ms, e.id));
    let header = vec!["event_time_ms".to_string(), "label".to_string()];
    to_csv(
        std::iter::once(header).chain(
            sorted
                .into_iter()
                .map(|e| vec![e.event_time_ms.to_string(), e.label.clone()]),
        ),
    )
}

/// Writes one file per series plus `events.csv`; returns the paths written.
pub fn emit_plot_data(
    series: &[PriceSeries],
    events: &[EventSpec],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    for s in series {
        let path = out_dir.join(format!("{}.csv", s.symbol()));
        write_atomic(&path, &series_plot_csv(s)?)?;
        written.push(path);
    }
    let path = out_dir.join("events.csv");
    write_atomic(&path, &events_plot_csv(events))?;
    written.push(path);
    Ok(written)
}
