//! Minute-resolution event-study statistics.
//!
//! Log returns of close prices, a constant-mean expected-return model fitted
//! on a pre-event estimation window, cumulative abnormal returns (CAR) over
//! post-event windows and their two-tailed t-tests, plus a seeded synthetic
//! series generator used to validate the estimator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, networking and
//! the command-line tool live in the `eventstudy` crate.
#![no_std]

extern crate alloc;

pub mod series;
pub mod study;
pub mod synthetic;
pub mod tdist;

pub use series::{
    align_down, audit_gaps, log_returns, slice_relative, Candle, Gap, GapReport, PriceSeries,
    ReturnPoint, ReturnSeries, SeriesError, Sliced, TimeIndexed, WindowSpec, MINUTE_MS,
};
pub use study::{
    abnormal_returns, car_t_statistic, cumulative_abnormal_return, fit_constant_mean,
    fit_constant_mean_values, run_event_study, significance_level, threshold_flag, two_tailed_p,
    DfMode, EstimationConfig, EventOutcome, EventResult, EventSpec, MeanModel, Significance,
    StudyError, WindowOutcome, WindowStats, DEFAULT_CAR_ENDS,
};
pub use synthetic::{generate, inject_shock, NormalStream, Shock, SynthError, SynthSpec};
