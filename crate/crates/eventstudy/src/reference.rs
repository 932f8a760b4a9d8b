//! Published CAR table (six tweet events, windows `0..5` to `0..360`) kept
//! as a fixture for side-by-side comparison and consistency checks.

use eventstudy_core::{Significance, WindowSpec};

use crate::config::parse_window;
use crate::error::{Error, Result};

pub const PUBLISHED_CAR_TABLE: &str = include_str!("../fixtures/published_car_table.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct PublishedCell {
    pub event_id: u32,
    pub window: WindowSpec,
    /// As printed, in percent.
    pub car_percent: f64,
    pub t_stat: f64,
    pub stars: Significance,
}

impl PublishedCell {
    /// Standard error implied by the printed CAR and t.
    pub fn implied_s_car(&self) -> f64 {
        self.car_percent / 100.0 / self.t_stat
    }

    /// Return count of the window under the bar-offset convention.
    pub fn n(&self) -> usize {
        (self.window.end() - self.window.start()) as usize
    }
}

pub fn parse_published(text: &str) -> Result<Vec<PublishedCell>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        cells.push(PublishedCell {
            event_id: rec[0].parse().map_err(|_| bad("event_id"))?,
            window: parse_window(&rec[1])?,
            car_percent: rec[2].parse().map_err(|_| bad("car_percent"))?,
            t_stat: rec[3].parse().map_err(|_| bad("t_stat"))?,
            stars: Significance::from_stars(&rec[4]).ok_or_else(|| bad("stars"))?,
        });
    }
    Ok(cells)
}

pub fn published_table() -> Vec<PublishedCell> {
    parse_published(PUBLISHED_CAR_TABLE).expect("bundled table parses")
}
