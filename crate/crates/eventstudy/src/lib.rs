//! IO, file formats and command line for minute-resolution event studies.
//!
//! The statistics live in [`eventstudy_core`]; this crate adds the candle
//! and event CSV formats, the paginated kline client with its per-day cache,
//! report rendering and plot-data output.

pub mod cache;
pub mod candles_csv;
pub mod cli;
pub mod config;
pub mod error;
pub mod events;
pub mod fetch;
pub mod plot;
pub mod reference;
pub mod report;

pub use error::{Error, Result};
pub use eventstudy_core as core;
