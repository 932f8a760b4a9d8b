//! Per-day candle cache: `<root>/<SYMBOL>/<YYYY-MM-DD>.csv` (UTC days).
//!
//! A day file that exists is treated as complete. Missing days are fetched
//! whole and written atomically; days that have not finished yet are
//! returned but not stored.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use eventstudy_core::{Candle, PriceSeries};

use crate::candles_csv::{load_candles_csv_as, store_candles_csv};
use crate::error::{Error, Result};
use crate::fetch::{FetchRequest, KlineClient};

pub const DAY_MS: i64 = 86_400_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub days_from_cache: usize,
    pub days_fetched: usize,
}

#[derive(Debug, Clone)]
pub struct CandleCache {
    root: PathBuf,
}

pub fn day_start(ms: i64) -> i64 {
    ms - ms.rem_euclid(DAY_MS)
}

impl CandleCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn day_path(&self, symbol: &str, day_start_ms: i64) -> PathBuf {
        let day = DateTime::<Utc>::from_timestamp_millis(day_start_ms)
            .map(|d| d.format("%Y-%m-%d").to_string())
            .unwrap_or_else(|| day_start_ms.to_string());
        self.root.join(symbol).join(format!("{day}.csv"))
    }

    /// Candles in `[start_ms, end_ms)`, fetching uncached days through
    /// `client`. Without a client a missing day is an error.
    pub fn load_range(
        &self,
        symbol: &str,
        start_ms: i64,
        end_ms: i64,
        client: Option<&KlineClient>,
    ) -> Result<(PriceSeries, CacheStats)> {
        let mut stats = CacheStats::default();
        let mut candles: Vec<Candle> = Vec::new();
        let now = Utc::now().timestamp_millis();
        let mut day = day_start(start_ms);
        while day < end_ms {
            let path = self.day_path(symbol, day);
            let series = if path.exists() {
                stats.days_from_cache += 1;
                load_candles_csv_as(&path, symbol)?
            } else {
                let client = client.ok_or_else(|| {
                    Error::Config(format!(
                        "{} is not cached and fetching is disabled",
                        path.display()
                    ))
                })?;
                let series = client.fetch_klines(&FetchRequest::new(symbol, day, day + DAY_MS)?)?;
                if day + DAY_MS <= now {
                    store_candles_csv(&series, &path)?;
                }
                stats.days_fetched += 1;
                series
            };
            candles.extend(
                series
                    .into_candles()
                    .into_iter()
                    .filter(|c| c.open_time_ms >= start_ms && c.open_time_ms < end_ms),
            );
            day += DAY_MS;
        }
        Ok((PriceSeries::new(symbol, 1, candles)?, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_paths() {
        let cache = CandleCache::new("/data");
        let t = 1_620_720_780_000; // 2021-05-11T08:13Z
        assert_eq!(day_start(t), 1_620_691_200_000);
        assert_eq!(
            cache.day_path("DOGEUSDT", day_start(t)),
            PathBuf::from("/data/DOGEUSDT/2021-05-11.csv")
        );
    }

    #[test]
    fn offline_miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CandleCache::new(dir.path());
        assert!(matches!(
            cache.load_range("X", 0, 1000, None),
            Err(Error::Config(_))
        ));
    }
}
