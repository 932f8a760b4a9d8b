//! Paginated one-minute kline download.
//!
//! Wire format: `GET {base}/api/v3/klines?symbol=S&interval=1m&startTime=ms&endTime=ms&limit=n`
//! answers a JSON array of arrays; index 0 is the open time in ms, indices
//! 1..=5 are open, high, low, close and volume as decimal strings. Later
//! fields are ignored.

use std::thread;
use std::time::Duration;

use eventstudy_core::{Candle, PriceSeries, MINUTE_MS};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://api.binance.com";
pub const BASE_URL_ENV: &str = "EVENTSTUDY_BASE_URL";
pub const MAX_PAGE_LIMIT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRequest {
    pub symbol: String,
    pub interval: &'static str,
    /// Inclusive.
    pub start_time_ms: i64,
    /// Exclusive.
    pub end_time_ms: i64,
    pub page_limit: u32,
}

impl FetchRequest {
    pub fn new(symbol: impl Into<String>, start_time_ms: i64, end_time_ms: i64) -> Result<Self> {
        if start_time_ms >= end_time_ms {
            return Err(Error::Config(format!(
                "fetch start {start_time_ms} must be before end {end_time_ms}"
            )));
        }
        Ok(Self {
            symbol: symbol.into(),
            interval: "1m",
            start_time_ms,
            end_time_ms,
            page_limit: MAX_PAGE_LIMIT,
        })
    }

    pub fn with_page_limit(mut self, page_limit: u32) -> Result<Self> {
        if page_limit == 0 || page_limit > MAX_PAGE_LIMIT {
            return Err(Error::Config(format!(
                "page limit must be in 1..={MAX_PAGE_LIMIT}"
            )));
        }
        self.page_limit = page_limit;
        Ok(self)
    }
}

/// Retries on 429 and 5xx with doubling delays.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

pub struct KlineClient {
    base_url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl KlineClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(30))
                .build(),
            retry: RetryPolicy::default(),
        }
    }

    /// Uses `EVENTSTUDY_BASE_URL` when set.
    pub fn from_env() -> Self {
        Self::new(std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string()))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn get_page(&self, req: &FetchRequest, start_ms: i64) -> Result<Vec<Candle>> {
        let url = format!("{}/api/v3/klines", self.base_url);
        let mut delay = self.retry.base_delay;
        let attempts = self.retry.attempts.max(1);
        for attempt in 1..=attempts {
            let response = self
                .agent
                .get(&url)
                .query("symbol", &req.symbol)
                .query("interval", req.interval)
                .query("startTime", &start_ms.to_string())
                .query("endTime", &(req.end_time_ms - 1).to_string())
                .query("limit", &req.page_limit.to_string())
                .call();
            match response {
                Ok(resp) => {
                    let body = resp
                        .into_string()
                        .map_err(|e| Error::Transport(e.to_string()))?;
                    return parse_klines(&body);
                }
                Err(ureq::Error::Status(status, resp)) => {
                    let retryable = status == 429 || (500..600).contains(&status);
                    if retryable && attempt < attempts {
                        thread::sleep(delay);
                        delay *= 2;
                        continue;
                    }
                    if status == 429 {
                        return Err(Error::RateLimited { attempts });
                    }
                    let body = resp.into_string().unwrap_or_default();
                    return Err(Error::Http { status, body });
                }
                Err(e) => return Err(Error::Transport(e.to_string())),
            }
        }
        unreachable!("loop always returns")
    }

    /// Downloads `[start, end)` page by page and stitches the pages, dropping
    /// any bar already seen.
    pub fn fetch_klines(&self, req: &FetchRequest) -> Result<PriceSeries> {
        let mut candles: Vec<Candle> = Vec::new();
        let mut cursor = req.start_time_ms;
        loop {
            let page = self.get_page(req, cursor)?;
            let Some(last) = page.last().map(|c| c.open_time_ms) else {
                break;
            };
            for c in &page {
                let fresh = candles
                    .last()
                    .is_none_or(|l| c.open_time_ms > l.open_time_ms);
                if fresh && c.open_time_ms >= req.start_time_ms && c.open_time_ms < req.end_time_ms
                {
                    candles.push(*c);
                }
            }
            let next = last + MINUTE_MS;
            if page.len() < req.page_limit as usize || next >= req.end_time_ms || next <= cursor {
                break;
            }
            cursor = next;
        }
        if candles.is_empty() {
            return Err(Error::EmptySeries {
                symbol: req.symbol.clone(),
                start_ms: req.start_time_ms,
                end_ms: req.end_time_ms,
            });
        }
        Ok(PriceSeries::new(req.symbol.clone(), 1, candles)?)
    }
}

fn field_f64(row: &[Value], idx: usize) -> Result<f64> {
    match row.get(idx) {
        Some(Value::String(s)) => s
            .parse()
            .map_err(|_| Error::MalformedPayload(format!("field {idx}: `{s}` is not a number"))),
        other => Err(Error::MalformedPayload(format!(
            "field {idx}: expected a decimal string, found {other:?}"
        ))),
    }
}

pub fn parse_klines(body: &str) -> Result<Vec<Candle>> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| Error::MalformedPayload(e.to_string()))?;
    let Value::Array(rows) = value else {
        return Err(Error::MalformedPayload("top level is not an array".into()));
    };
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let Value::Array(row) = row else {
                return Err(Error::MalformedPayload(format!("row {i} is not an array")));
            };
            if row.len() < 6 {
                return Err(Error::MalformedPayload(format!(
                    "row {i} has {} fields, need at least 6",
                    row.len()
                )));
            }
            let open_time_ms = row[0].as_i64().ok_or_else(|| {
                Error::MalformedPayload(format!("row {i}: open time not an integer"))
            })?;
            let candle = Candle::new(
                open_time_ms,
                field_f64(row, 1)?,
                field_f64(row, 2)?,
                field_f64(row, 3)?,
                field_f64(row, 4)?,
                field_f64(row, 5)?,
            )
            .map_err(|e| Error::MalformedPayload(format!("row {i}: {e}")))?;
            Ok(candle)
        })
        .collect()
}
