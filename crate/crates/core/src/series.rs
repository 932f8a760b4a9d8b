//! Minute-bar price series, log returns and event-relative windows.
//!
//! All timestamps are integer epoch milliseconds (UTC). Window arithmetic is
//! done in integers; floating point is only used for prices and returns.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Milliseconds per minute.
pub const MINUTE_MS: i64 = 60_000;

/// Errors raised while constructing or transforming series.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesError {
    /// Fewer than two candles where returns are required.
    EmptySeries,
    /// A price is zero, negative or not finite.
    NonPositivePrice { open_time_ms: i64 },
    /// `low`/`high` do not bracket `open` and `close`.
    InconsistentRange { open_time_ms: i64 },
    /// Volume is negative or not finite.
    InvalidVolume { open_time_ms: i64 },
    /// Timestamps are not strictly increasing at `index`.
    NonMonotonic { index: usize },
    /// The step into `index` is not a multiple of the bar interval.
    MisalignedGap { index: usize },
    /// Bar interval must be a positive number of minutes.
    InvalidInterval,
    /// `start_offset_minutes > end_offset_minutes`.
    InvalidWindow { start: i64, end: i64 },
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptySeries => write!(f, "series has fewer than two candles"),
            Self::NonPositivePrice { open_time_ms } => {
                write!(f, "non-positive or non-finite price at {open_time_ms}")
            }
            Self::InconsistentRange { open_time_ms } => {
                write!(f, "high/low do not bracket open/close at {open_time_ms}")
            }
            Self::InvalidVolume { open_time_ms } => {
                write!(f, "negative or non-finite volume at {open_time_ms}")
            }
            Self::NonMonotonic { index } => {
                write!(f, "timestamps not strictly increasing at index {index}")
            }
            Self::MisalignedGap { index } => {
                write!(
                    f,
                    "gap before index {index} is not a multiple of the interval"
                )
            }
            Self::InvalidInterval => write!(f, "interval must be a positive number of minutes"),
            Self::InvalidWindow { start, end } => {
                write!(f, "window start {start} is after end {end}")
            }
        }
    }
}

impl core::error::Error for SeriesError {}

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candle {
    pub open_time_ms: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    pub fn new(
        open_time_ms: i64,
        open: f64,
        high: f64,
        low: f64,
        close: f64,
        volume: f64,
    ) -> Result<Self, SeriesError> {
        let candle = Self {
            open_time_ms,
            open,
            high,
            low,
            close,
            volume,
        };
        candle.validate()?;
        Ok(candle)
    }

    /// Checks price positivity, the high/low bracket and the volume sign.
    pub fn validate(&self) -> Result<(), SeriesError> {
        let t = self.open_time_ms;
        for p in [self.open, self.high, self.low, self.close] {
            if !(p.is_finite() && p > 0.0) {
                return Err(SeriesError::NonPositivePrice { open_time_ms: t });
            }
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(SeriesError::InconsistentRange { open_time_ms: t });
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(SeriesError::InvalidVolume { open_time_ms: t });
        }
        Ok(())
    }
}

/// An ordered, validated run of candles for one symbol.
///
/// Gaps are allowed as long as every step is a whole number of intervals;
/// use [`audit_gaps`] to list them.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    interval_minutes: u32,
    candles: Vec<Candle>,
}

impl PriceSeries {
    pub fn new(
        symbol: impl Into<String>,
        interval_minutes: u32,
        candles: Vec<Candle>,
    ) -> Result<Self, SeriesError> {
        if interval_minutes == 0 {
            return Err(SeriesError::InvalidInterval);
        }
        let step = i64::from(interval_minutes) * MINUTE_MS;
        for (i, c) in candles.iter().enumerate() {
            c.validate()?;
            if i > 0 {
                let delta = c.open_time_ms - candles[i - 1].open_time_ms;
                if delta <= 0 {
                    return Err(SeriesError::NonMonotonic { index: i });
                }
                if delta % step != 0 {
                    return Err(SeriesError::MisalignedGap { index: i });
                }
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            interval_minutes,
            candles,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn interval_ms(&self) -> i64 {
        i64::from(self.interval_minutes) * MINUTE_MS
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn first_time_ms(&self) -> Option<i64> {
        self.candles.first().map(|c| c.open_time_ms)
    }

    pub fn last_time_ms(&self) -> Option<i64> {
        self.candles.last().map(|c| c.open_time_ms)
    }

    pub fn into_candles(self) -> Vec<Candle> {
        self.candles
    }
}

/// One log return, stamped with the open time of the later candle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnPoint {
    pub timestamp_ms: i64,
    pub value: f64,
}

/// Ordered log (or abnormal) returns for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    pub interval_minutes: u32,
    pub points: Vec<ReturnPoint>,
}

impl ReturnSeries {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `f` to every value, keeping timestamps.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            symbol: self.symbol.clone(),
            interval_minutes: self.interval_minutes,
            points: self
                .points
                .iter()
                .map(|p| ReturnPoint {
                    timestamp_ms: p.timestamp_ms,
                    value: f(p.value),
                })
                .collect(),
        }
    }
}

/// Inclusive minute offsets `[start, end]` around an event at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WindowSpec {
    start_offset_minutes: i64,
    end_offset_minutes: i64,
}

impl WindowSpec {
    pub fn new(start_offset_minutes: i64, end_offset_minutes: i64) -> Result<Self, SeriesError> {
        if start_offset_minutes > end_offset_minutes {
            return Err(SeriesError::InvalidWindow {
                start: start_offset_minutes,
                end: end_offset_minutes,
            });
        }
        Ok(Self {
            start_offset_minutes,
            end_offset_minutes,
        })
    }

    pub fn start(&self) -> i64 {
        self.start_offset_minutes
    }

    pub fn end(&self) -> i64 {
        self.end_offset_minutes
    }

    /// Number of whole minutes covered, counting both ends.
    pub fn minutes_inclusive(&self) -> i64 {
        self.end_offset_minutes - self.start_offset_minutes + 1
    }

    /// Absolute `[from, to]` bounds in epoch ms for an event instant.
    pub fn bounds_ms(&self, event_time_ms: i64) -> (i64, i64) {
        (
            event_time_ms + self.start_offset_minutes * MINUTE_MS,
            event_time_ms + self.end_offset_minutes * MINUTE_MS,
        )
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}..{}",
            self.start_offset_minutes, self.end_offset_minutes
        )
    }
}

/// Something with sorted timestamps that can be cut to a time range.
pub trait TimeIndexed: Sized {
    /// Grid the event time is snapped to, in ms.
    fn grid_ms(&self) -> i64;

    /// Copy holding only the items stamped within `[from_ms, to_ms]`.
    fn range_ms(&self, from_ms: i64, to_ms: i64) -> Self;
}

fn sorted_range<T>(items: &[T], from_ms: i64, to_ms: i64, key: impl Fn(&T) -> i64) -> &[T] {
    let lo = items.partition_point(|x| key(x) < from_ms);
    let hi = items.partition_point(|x| key(x) <= to_ms);
    if lo >= hi {
        &items[0..0]
    } else {
        &items[lo..hi]
    }
}

impl TimeIndexed for PriceSeries {
    fn grid_ms(&self) -> i64 {
        self.interval_ms()
    }

    fn range_ms(&self, from_ms: i64, to_ms: i64) -> Self {
        Self {
            symbol: self.symbol.clone(),
            interval_minutes: self.interval_minutes,
            candles: sorted_range(&self.candles, from_ms, to_ms, |c| c.open_time_ms).to_vec(),
        }
    }
}

impl TimeIndexed for ReturnSeries {
    fn grid_ms(&self) -> i64 {
        i64::from(self.interval_minutes.max(1)) * MINUTE_MS
    }

    fn range_ms(&self, from_ms: i64, to_ms: i64) -> Self {
        Self {
            symbol: self.symbol.clone(),
            interval_minutes: self.interval_minutes,
            points: sorted_range(&self.points, from_ms, to_ms, |p| p.timestamp_ms).to_vec(),
        }
    }
}

/// A slice cut around an event, with the event time actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct Sliced<T> {
    pub series: T,
    /// Event time snapped down to the series grid.
    pub event_time_ms: i64,
    /// Event time as requested by the caller.
    pub requested_event_time_ms: i64,
}

impl<T> Sliced<T> {
    /// Whether the requested event time had to be rounded down.
    pub fn rounded(&self) -> bool {
        self.event_time_ms != self.requested_event_time_ms
    }
}

/// Snaps `t` down to the containing bar on a `grid_ms` grid.
pub fn align_down(t: i64, grid_ms: i64) -> i64 {
    t - t.rem_euclid(grid_ms)
}

/// Cuts `series` to the inclusive window around `event_time_ms`.
pub fn slice_relative<T: TimeIndexed>(
    series: &T,
    event_time_ms: i64,
    window: WindowSpec,
) -> Sliced<T> {
    let aligned = align_down(event_time_ms, series.grid_ms());
    let (from, to) = window.bounds_ms(aligned);
    Sliced {
        series: series.range_ms(from, to),
        event_time_ms: aligned,
        requested_event_time_ms: event_time_ms,
    }
}

/// One-period log returns of the close prices.
///
/// A missing bar yields a single return spanning the hole; nothing is filled.
pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries, SeriesError> {
    let candles = series.candles();
    if candles.len() < 2 {
        return Err(SeriesError::EmptySeries);
    }
    if let Some(c) = candles.iter().find(|c| c.close.is_nan() || c.close <= 0.0) {
        return Err(SeriesError::NonPositivePrice {
            open_time_ms: c.open_time_ms,
        });
    }
    let points = candles
        .windows(2)
        .map(|w| ReturnPoint {
            timestamp_ms: w[1].open_time_ms,
            value: libm::log(w[1].close) - libm::log(w[0].close),
        })
        .collect();
    Ok(ReturnSeries {
        symbol: series.symbol.clone(),
        interval_minutes: series.interval_minutes,
        points,
    })
}

/// A run of missing bars: first missing open time and how many minutes are absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub start_ms: i64,
    pub missing_minutes: i64,
}

pub type GapReport = Vec<Gap>;

/// Lists every hole between consecutive candles, in time order.
pub fn audit_gaps(series: &PriceSeries) -> GapReport {
    let step = series.interval_ms();
    series
        .candles()
        .windows(2)
        .filter_map(|w| {
            let delta = w[1].open_time_ms - w[0].open_time_ms;
            (delta > step).then(|| Gap {
                start_ms: w[0].open_time_ms + step,
                missing_minutes: (delta - step) / MINUTE_MS,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    const T0: i64 = 1_611_866_820_000; // a minute boundary

    fn flat(n: usize, closes: &[f64]) -> PriceSeries {
        let candles = (0..n)
            .map(|i| {
                let c = closes[i % closes.len()];
                Candle::new(T0 + i as i64 * MINUTE_MS, c, c, c, c, 1.0).unwrap()
            })
            .collect();
        PriceSeries::new("TEST", 1, candles).unwrap()
    }

    fn from_closes(closes: &[f64]) -> PriceSeries {
        let candles = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| Candle::new(T0 + i as i64 * MINUTE_MS, c, c, c, c, 0.0).unwrap())
            .collect();
        PriceSeries::new("TEST", 1, candles).unwrap()
    }

    fn with_times(offsets: &[i64]) -> PriceSeries {
        let candles = offsets
            .iter()
            .map(|&o| Candle::new(T0 + o * MINUTE_MS, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap())
            .collect();
        PriceSeries::new("TEST", 1, candles).unwrap()
    }

    #[test]
    fn log_returns_examples() {
        let r = log_returns(&from_closes(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.values().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(r.points[0].timestamp_ms, T0 + MINUTE_MS);

        let up = log_returns(&from_closes(&[100.0, 110.0])).unwrap();
        assert_relative_eq!(up.points[0].value, 0.09531018, max_relative = 1e-7);
        let down = log_returns(&from_closes(&[100.0, 90.0])).unwrap();
        assert_relative_eq!(down.points[0].value, -0.10536052, max_relative = 1e-7);
    }

    #[test]
    fn log_returns_needs_two_candles() {
        assert_eq!(
            log_returns(&from_closes(&[100.0])),
            Err(SeriesError::EmptySeries)
        );
        assert_eq!(
            log_returns(&from_closes(&[])),
            Err(SeriesError::EmptySeries)
        );
    }

    #[test]
    fn candle_rejects_bad_values() {
        assert!(matches!(
            Candle::new(0, 1.0, 1.0, 1.0, 0.0, 1.0),
            Err(SeriesError::NonPositivePrice { .. })
        ));
        assert!(matches!(
            Candle::new(0, 1.0, 1.5, 1.2, 1.3, 1.0),
            Err(SeriesError::InconsistentRange { .. })
        ));
        assert!(matches!(
            Candle::new(0, 1.0, 1.0, 1.0, 1.0, -1.0),
            Err(SeriesError::InvalidVolume { .. })
        ));
        assert!(Candle::new(0, 1.0, f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn series_rejects_disorder_and_misalignment() {
        let c = |t: i64| Candle::new(t, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            PriceSeries::new("X", 1, vec![c(T0), c(T0)]),
            Err(SeriesError::NonMonotonic { index: 1 })
        );
        assert_eq!(
            PriceSeries::new("X", 1, vec![c(T0 + MINUTE_MS), c(T0)]),
            Err(SeriesError::NonMonotonic { index: 1 })
        );
        assert_eq!(
            PriceSeries::new("X", 1, vec![c(T0), c(T0 + 90_000)]),
            Err(SeriesError::MisalignedGap { index: 1 })
        );
        assert_eq!(
            PriceSeries::new("X", 0, vec![]),
            Err(SeriesError::InvalidInterval)
        );
        assert!(PriceSeries::new("X", 1, vec![]).unwrap().is_empty());
    }

    #[test]
    fn window_rejects_inverted_bounds() {
        assert!(WindowSpec::new(5, 0).is_err());
        assert_eq!(WindowSpec::new(-600, -60).unwrap().minutes_inclusive(), 541);
    }

    #[test]
    fn slice_counts() {
        let s = flat(2000, &[1.0]);
        let event = T0 + 1000 * MINUTE_MS;
        let one = slice_relative(&s, event, WindowSpec::new(0, 0).unwrap());
        assert_eq!(one.series.len(), 1);
        assert_eq!(one.series.candles()[0].open_time_ms, event);
        assert!(!one.rounded());

        let est = slice_relative(&s, event, WindowSpec::new(-600, -60).unwrap());
        assert_eq!(est.series.len(), 541);
        let post = slice_relative(&s, event, WindowSpec::new(0, 5).unwrap());
        assert_eq!(post.series.len(), 6);
    }

    #[test]
    fn slice_rounds_event_down_to_bar() {
        let s = flat(20, &[1.0]);
        let event = T0 + 10 * MINUTE_MS + 33_123;
        let sl = slice_relative(&s, event, WindowSpec::new(0, 0).unwrap());
        assert!(sl.rounded());
        assert_eq!(sl.event_time_ms, T0 + 10 * MINUTE_MS);
        assert_eq!(sl.series.candles()[0].open_time_ms, T0 + 10 * MINUTE_MS);
    }

    #[test]
    fn slice_outside_is_empty() {
        let s = flat(10, &[1.0]);
        let sl = slice_relative(&s, T0 + 100 * MINUTE_MS, WindowSpec::new(0, 5).unwrap());
        assert!(sl.series.is_empty());
    }

    #[test]
    fn gap_audit_examples() {
        assert!(audit_gaps(&flat(10, &[1.0])).is_empty());

        let one = audit_gaps(&with_times(&[0, 1, 2, 4, 5]));
        assert_eq!(
            one,
            vec![Gap {
                start_ms: T0 + 3 * MINUTE_MS,
                missing_minutes: 1
            }]
        );

        let two = audit_gaps(&with_times(&[0, 1, 4, 5, 6, 9]));
        assert_eq!(
            two,
            vec![
                Gap {
                    start_ms: T0 + 2 * MINUTE_MS,
                    missing_minutes: 2
                },
                Gap {
                    start_ms: T0 + 7 * MINUTE_MS,
                    missing_minutes: 2
                },
            ]
        );
    }

    #[test]
    fn gap_yields_single_spanning_return() {
        let candles = [(0, 100.0), (1, 101.0), (4, 99.0)]
            .iter()
            .map(|&(o, c)| Candle::new(T0 + o * MINUTE_MS, c, c, c, c, 0.0).unwrap())
            .collect();
        let s = PriceSeries::new("X", 1, candles).unwrap();
        let r = log_returns(&s).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.points[1].timestamp_ms, T0 + 4 * MINUTE_MS);
        assert_relative_eq!(
            r.points[1].value,
            libm::log(99.0 / 101.0),
            max_relative = 1e-12
        );
    }
}
