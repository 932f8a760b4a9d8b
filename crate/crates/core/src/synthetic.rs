//! Seeded synthetic minute series with injectable log-return shocks.
//!
//! The random stream is fully specified so other implementations can
//! reproduce it:
//!
//! 1. The generator is xoshiro256++ seeded from the 64-bit seed through
//!    SplitMix64 (the `rand_xoshiro` `seed_from_u64` construction).
//! 2. Each standard normal draw consumes two `u64` outputs `a`, `b`:
//!    `u1 = ((a >> 11) + 1) * 2^-53` in `(0, 1]`, `u2 = (b >> 11) * 2^-53`, and
//!    `z = sqrt(-2 ln u1) * cos(2 pi u2)` (Box–Muller, cosine branch only).
//! 3. Return `i` (for `i = 1..n`) is `mu + sigma * z_i` plus any shocks at
//!    offset `i`; close `i` is `start_price * exp(sum of returns 1..=i)`.
//!
//! Transcendental functions come from `libm`, so the output is identical on
//! every platform.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::series::{Candle, PriceSeries, SeriesError, MINUTE_MS};

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidSpec(&'static str),
    OffsetOutOfRange { offset_minute: i64, len: usize },
    Series(SeriesError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidSpec(msg) => write!(f, "invalid synthetic spec: {msg}"),
            Self::OffsetOutOfRange { offset_minute, len } => {
                write!(
                    f,
                    "shock offset {offset_minute} outside series of {len} bars"
                )
            }
            Self::Series(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<SeriesError> for SynthError {
    fn from(e: SeriesError) -> Self {
        Self::Series(e)
    }
}

/// A log-return jump added at a bar offset from the first candle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shock {
    pub offset_minute: i64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub symbol: String,
    pub n_minutes: usize,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
    pub start_price: f64,
    /// Open time of the first bar; snapped down to a minute.
    pub start_time_ms: i64,
    pub shocks: Vec<Shock>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            symbol: "SYNTH".into(),
            n_minutes: 2000,
            mu: 0.0,
            sigma: 0.002,
            seed: 0,
            start_price: 100.0,
            // 2021-01-01T00:00:00Z
            start_time_ms: 1_609_459_200_000,
            shocks: Vec::new(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_minutes < 2 {
            return Err(SynthError::InvalidSpec("n_minutes must be at least 2"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(SynthError::InvalidSpec("sigma must be finite and >= 0"));
        }
        if !self.mu.is_finite() {
            return Err(SynthError::InvalidSpec("mu must be finite"));
        }
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return Err(SynthError::InvalidSpec("start_price must be > 0"));
        }
        for s in &self.shocks {
            if s.offset_minute < 1 || s.offset_minute >= self.n_minutes as i64 {
                return Err(SynthError::OffsetOutOfRange {
                    offset_minute: s.offset_minute,
                    len: self.n_minutes,
                });
            }
            if !s.magnitude.is_finite() {
                return Err(SynthError::InvalidSpec("shock magnitude must be finite"));
            }
        }
        Ok(())
    }
}

/// Standard normal stream described in the module docs.
pub struct NormalStream {
    rng: Xoshiro256PlusPlus,
}

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) + 1) as f64 * TWO_POW_NEG_53;
        let u2 = (b >> 11) as f64 * TWO_POW_NEG_53;
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }
}

/// The per-bar log returns (index 0 is unused and always 0).
pub fn generate_returns(spec: &SynthSpec) -> Result<Vec<f64>, SynthError> {
    spec.validate()?;
    let mut stream = NormalStream::new(spec.seed);
    let mut returns = Vec::with_capacity(spec.n_minutes);
    returns.push(0.0);
    for _ in 1..spec.n_minutes {
        returns.push(spec.mu + spec.sigma * stream.next_standard_normal());
    }
    for s in &spec.shocks {
        returns[s.offset_minute as usize] += s.magnitude;
    }
    Ok(returns)
}

pub fn generate(spec: &SynthSpec) -> Result<PriceSeries, SynthError> {
    let returns = generate_returns(spec)?;
    let start = spec.start_time_ms - spec.start_time_ms.rem_euclid(MINUTE_MS);
    let mut cumulative = 0.0;
    let mut prev_close = spec.start_price;
    let mut candles = Vec::with_capacity(spec.n_minutes);
    for (i, r) in returns.iter().enumerate() {
        cumulative += r;
        let close = if i == 0 {
            spec.start_price
        } else {
            spec.start_price * libm::exp(cumulative)
        };
        let open = prev_close;
        candles.push(Candle::new(
            start + i as i64 * MINUTE_MS,
            open,
            open.max(close),
            open.min(close),
            close,
            1.0,
        )?);
        prev_close = close;
    }
    Ok(PriceSeries::new(spec.symbol.clone(), 1, candles)?)
}

/// Multiplies every close from `offset_minute` onward by `exp(magnitude)`.
///
/// The bar at the offset keeps its open and has high/low widened to the new
/// close; later bars are scaled whole.
pub fn inject_shock(
    series: &PriceSeries,
    offset_minute: i64,
    magnitude: f64,
) -> Result<PriceSeries, SynthError> {
    let out_of_range = SynthError::OffsetOutOfRange {
        offset_minute,
        len: series.len(),
    };
    let Some(first) = series.first_time_ms() else {
        return Err(out_of_range);
    };
    if !magnitude.is_finite() {
        return Err(SynthError::InvalidSpec("shock magnitude must be finite"));
    }
    if offset_minute < 1 {
        return Err(out_of_range);
    }
    let cut = first + offset_minute * MINUTE_MS;
    let idx = series.candles().partition_point(|c| c.open_time_ms < cut);
    if idx >= series.len() {
        return Err(out_of_range);
    }
    let factor = libm::exp(magnitude);
    let candles = series
        .candles()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            use core::cmp::Ordering::*;
            match i.cmp(&idx) {
                Less => *c,
                Equal => {
                    let close = c.close * factor;
                    Candle {
                        close,
                        high: c.high.max(close),
                        low: c.low.min(close),
                        ..*c
                    }
                }
                Greater => Candle {
                    open: c.open * factor,
                    high: c.high * factor,
                    low: c.low * factor,
                    close: c.close * factor,
                    ..*c
                },
            }
        })
        .collect();
    Ok(PriceSeries::new(
        series.symbol(),
        series.interval_minutes(),
        candles,
    )?)
}
