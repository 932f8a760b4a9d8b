//! Constant-mean event study: model fit, abnormal returns, CAR and its t-test.
//!
//! Window conventions:
//!
//! * The estimation window is an inclusive slice of *return* timestamps, so
//!   `-600..-60` on gapless one-minute data holds 541 returns.
//! * A CAR window `(t1, t2)` is read in *bar* offsets: it sums the returns
//!   that move the price from bar `t1` to bar `t2`, i.e. return timestamps in
//!   `(t1, t2]`. Window `0..5` therefore holds 5 returns and the first one is
//!   `close[0] -> close[1]`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::series::{
    align_down, log_returns, slice_relative, PriceSeries, ReturnSeries, SeriesError, WindowSpec,
    MINUTE_MS,
};
use crate::tdist;

/// Per-operation and per-event failures.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyError {
    /// Too few estimation observations, or zero residual variance.
    DegenerateWindow {
        m: usize,
        reason: &'static str,
    },
    /// The estimation window is missing too many bars.
    ExcessiveGaps {
        missing_fraction: f64,
        limit: f64,
    },
    /// A CAR window contains no returns.
    EmptyWindow,
    /// Degrees of freedom below 1.
    InvalidDf {
        df: i64,
    },
    /// The price series does not reach far enough around the event.
    InsufficientCoverage {
        needed_from_ms: i64,
        needed_to_ms: i64,
    },
    /// No bar exists at the event minute.
    MissingEventBar {
        event_time_ms: i64,
    },
    /// The t-statistic came out NaN.
    NonFiniteStatistic,
    InvalidConfig(&'static str),
    Series(SeriesError),
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DegenerateWindow { m, reason } => {
                write!(f, "degenerate estimation window (m = {m}): {reason}")
            }
            Self::ExcessiveGaps {
                missing_fraction,
                limit,
            } => write!(
                f,
                "estimation window missing {:.2}% of bars (limit {:.2}%)",
                missing_fraction * 100.0,
                limit * 100.0
            ),
            Self::EmptyWindow => write!(f, "window contains no returns"),
            Self::InvalidDf { df } => write!(f, "invalid degrees of freedom {df}"),
            Self::InsufficientCoverage {
                needed_from_ms,
                needed_to_ms,
            } => write!(
                f,
                "series does not cover {needed_from_ms}..{needed_to_ms} ms"
            ),
            Self::MissingEventBar { event_time_ms } => {
                write!(f, "no bar at event minute {event_time_ms}")
            }
            Self::NonFiniteStatistic => write!(f, "t-statistic is not finite"),
            Self::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Self::Series(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StudyError {}

impl From<SeriesError> for StudyError {
    fn from(e: SeriesError) -> Self {
        Self::Series(e)
    }
}

/// Which degrees of freedom the star thresholds use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfMode {
    /// `n - 1`, from the CAR window length.
    #[default]
    Window,
    /// `m - 2`, matching the MSE denominator.
    Estimation,
}

impl DfMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Window => "window",
            Self::Estimation => "estimation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "window" => Some(Self::Window),
            "estimation" => Some(Self::Estimation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub est_window: WindowSpec,
    pub car_windows: Vec<WindowSpec>,
    /// Absolute CAR level that flags a window; 0 disables flagging.
    pub threshold: f64,
    pub df_mode: DfMode,
    /// Largest tolerated share of missing bars in the estimation window.
    pub max_gap_fraction: f64,
}

/// The nine CAR windows `0..5` through `0..360`.
pub const DEFAULT_CAR_ENDS: [i64; 9] = [5, 10, 30, 60, 120, 180, 240, 300, 360];

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            est_window: WindowSpec::new(-600, -60).expect("static window"),
            car_windows: DEFAULT_CAR_ENDS
                .iter()
                .map(|&end| WindowSpec::new(0, end).expect("static window"))
                .collect(),
            threshold: 0.10,
            df_mode: DfMode::Window,
            max_gap_fraction: 0.05,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.est_window.end() >= 0 {
            return Err(StudyError::InvalidConfig(
                "estimation window must end before the event",
            ));
        }
        if self.car_windows.is_empty() {
            return Err(StudyError::InvalidConfig("no CAR windows"));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(StudyError::InvalidConfig("threshold must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.max_gap_fraction) {
            return Err(StudyError::InvalidConfig(
                "max_gap_fraction must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    fn widest_car_end(&self) -> i64 {
        self.car_windows
            .iter()
            .map(WindowSpec::end)
            .max()
            .unwrap_or(0)
    }
}

/// Fitted constant-mean return model.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanModel {
    pub mu_hat: f64,
    pub residuals: Vec<f64>,
    pub m: usize,
    /// `sum(residual^2) / (m - 2)`.
    pub mse: f64,
}

/// Fits the sample mean and residual variance of estimation-window returns.
pub fn fit_constant_mean(est_returns: &ReturnSeries) -> Result<MeanModel, StudyError> {
    fit_constant_mean_values(&est_returns.values().collect::<Vec<_>>())
}

pub fn fit_constant_mean_values(values: &[f64]) -> Result<MeanModel, StudyError> {
    let m = values.len();
    if m < 3 {
        return Err(StudyError::DegenerateWindow {
            m,
            reason: "fewer than 3 observations",
        });
    }
    let mu_hat = values.iter().sum::<f64>() / m as f64;
    let residuals: Vec<f64> = values.iter().map(|r| r - mu_hat).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let mse = sse / (m - 2) as f64;
    let constant = values.iter().all(|&v| v == values[0]);
    if constant || mse == 0.0 {
        return Err(StudyError::DegenerateWindow {
            m,
            reason: "zero residual variance",
        });
    }
    if !mse.is_finite() {
        return Err(StudyError::NonFiniteStatistic);
    }
    Ok(MeanModel {
        mu_hat,
        residuals,
        m,
        mse,
    })
}

/// `AR_t = R_t - mu_hat`, timestamps kept.
pub fn abnormal_returns(event_returns: &ReturnSeries, model: &MeanModel) -> ReturnSeries {
    let mu = model.mu_hat;
    event_returns.map_values(|r| r - mu)
}

/// Sums abnormal returns across the CAR window; see the module docs for
/// which timestamps that covers.
pub fn cumulative_abnormal_return(
    ars: &ReturnSeries,
    window: WindowSpec,
    event_time_ms: i64,
) -> Result<(f64, usize), StudyError> {
    if window.start() == window.end() {
        return Err(StudyError::EmptyWindow);
    }
    let span = WindowSpec::new(window.start() + 1, window.end())?;
    let slice = slice_relative(ars, event_time_ms, span).series;
    if slice.is_empty() {
        return Err(StudyError::EmptyWindow);
    }
    Ok((slice.values().sum(), slice.len()))
}

/// `S_CAR = sqrt(n * mse)` and `t = CAR / S_CAR`.
pub fn car_t_statistic(car: f64, n: usize, model: &MeanModel) -> Result<(f64, f64), StudyError> {
    if n == 0 {
        return Err(StudyError::EmptyWindow);
    }
    if model.mse.is_nan() || model.mse <= 0.0 {
        return Err(StudyError::DegenerateWindow {
            m: model.m,
            reason: "zero residual variance",
        });
    }
    let s_car = libm::sqrt(n as f64 * model.mse);
    let t = car / s_car;
    if t.is_nan() {
        return Err(StudyError::NonFiniteStatistic);
    }
    Ok((s_car, t))
}

/// Two-tailed p-value of a t-statistic.
pub fn two_tailed_p(t_stat: f64, df: i64) -> Result<f64, StudyError> {
    if df < 1 {
        return Err(StudyError::InvalidDf { df });
    }
    tdist::two_tailed_p(t_stat, df as f64).ok_or(StudyError::NonFiniteStatistic)
}

/// Star level of a two-tailed test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Significance {
    None,
    P10,
    P05,
    P01,
}

impl Significance {
    pub fn stars(&self) -> &'static str {
        match self {
            Self::None => "",
            Self::P10 => "*",
            Self::P05 => "**",
            Self::P01 => "***",
        }
    }

    pub fn from_stars(s: &str) -> Option<Self> {
        match s {
            "" => Some(Self::None),
            "*" => Some(Self::P10),
            "**" => Some(Self::P05),
            "***" => Some(Self::P01),
            _ => None,
        }
    }

    /// Strictest level with `p < alpha`.
    pub fn from_p(p: f64) -> Self {
        if p < 0.01 {
            Self::P01
        } else if p < 0.05 {
            Self::P05
        } else if p < 0.10 {
            Self::P10
        } else {
            Self::None
        }
    }
}

pub fn significance_level(t_stat: f64, df: i64) -> Result<Significance, StudyError> {
    two_tailed_p(t_stat, df).map(Significance::from_p)
}

/// `|car| >= threshold`; a zero threshold never flags.
pub fn threshold_flag(car: f64, threshold: f64) -> bool {
    threshold > 0.0 && car.abs() >= threshold
}

/// Statistics for one CAR window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub n: usize,
    pub car: f64,
    pub s_car: f64,
    pub t_stat: f64,
    pub df: i64,
    pub p_value: f64,
    pub significance: Significance,
    pub threshold_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutcome {
    pub window: WindowSpec,
    pub result: Result<WindowStats, StudyError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventResult {
    pub event_id: u32,
    /// Event time snapped to the bar grid.
    pub event_time_ms: i64,
    pub mu_hat: f64,
    pub mse: f64,
    pub m: usize,
    pub windows: Vec<WindowOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventOutcome {
    Analyzed(EventResult),
    Skipped { event_id: u32, reason: StudyError },
}

impl EventOutcome {
    pub fn event_id(&self) -> u32 {
        match self {
            Self::Analyzed(r) => r.event_id,
            Self::Skipped { event_id, .. } => *event_id,
        }
    }

    /// True when the event or any of its windows failed.
    pub fn has_failure(&self) -> bool {
        match self {
            Self::Analyzed(r) => r.windows.iter().any(|w| w.result.is_err()),
            Self::Skipped { .. } => true,
        }
    }
}

/// A timestamped event to analyse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub id: u32,
    pub event_time_ms: i64,
    pub label: String,
    pub description: String,
}

fn window_stats(
    ars: &ReturnSeries,
    window: WindowSpec,
    event_time_ms: i64,
    model: &MeanModel,
    cfg: &EstimationConfig,
) -> Result<WindowStats, StudyError> {
    let (car, n) = cumulative_abnormal_return(ars, window, event_time_ms)?;
    let (s_car, t_stat) = car_t_statistic(car, n, model)?;
    let df = match cfg.df_mode {
        DfMode::Window => n as i64 - 1,
        DfMode::Estimation => model.m as i64 - 2,
    };
    let p_value = two_tailed_p(t_stat, df)?;
    Ok(WindowStats {
        n,
        car,
        s_car,
        t_stat,
        df,
        p_value,
        significance: Significance::from_p(p_value),
        threshold_flag: threshold_flag(car, cfg.threshold),
    })
}

fn analyze_event(
    series: &PriceSeries,
    returns: &ReturnSeries,
    event: &EventSpec,
    cfg: &EstimationConfig,
) -> Result<EventResult, StudyError> {
    let step = series.interval_ms();
    let t0 = align_down(event.event_time_ms, step);
    let (est_from, _) = cfg.est_window.bounds_ms(t0);
    // the first estimation return needs the bar before it
    let needed_from = est_from - step;
    let needed_to = t0 + cfg.widest_car_end() * MINUTE_MS;
    let covered = matches!(
        (series.first_time_ms(), series.last_time_ms()),
        (Some(first), Some(last)) if first <= needed_from && last >= needed_to
    );
    if !covered {
        return Err(StudyError::InsufficientCoverage {
            needed_from_ms: needed_from,
            needed_to_ms: needed_to,
        });
    }
    if series
        .candles()
        .binary_search_by_key(&t0, |c| c.open_time_ms)
        .is_err()
    {
        return Err(StudyError::MissingEventBar { event_time_ms: t0 });
    }

    let est = slice_relative(returns, t0, cfg.est_window).series;
    let expected = (cfg.est_window.minutes_inclusive() * MINUTE_MS / step).max(1) as f64;
    let missing_fraction = ((expected - est.len() as f64) / expected).max(0.0);
    if missing_fraction > cfg.max_gap_fraction {
        return Err(StudyError::ExcessiveGaps {
            missing_fraction,
            limit: cfg.max_gap_fraction,
        });
    }
    let model = fit_constant_mean(&est)?;

    let post_end = cfg.widest_car_end().max(1);
    let event_span = WindowSpec::new(0, post_end)?;
    let event_returns = slice_relative(returns, t0, event_span).series;
    let ars = abnormal_returns(&event_returns, &model);

    let mut windows = cfg.car_windows.clone();
    windows.sort();
    let windows = windows
        .into_iter()
        .map(|window| WindowOutcome {
            window,
            result: window_stats(&ars, window, t0, &model, cfg),
        })
        .collect();

    Ok(EventResult {
        event_id: event.id,
        event_time_ms: t0,
        mu_hat: model.mu_hat,
        mse: model.mse,
        m: model.m,
        windows,
    })
}

/// Runs the study for every event; per-event failures become `Skipped`.
///
/// Only an invalid configuration fails the whole batch. Output is ordered by
/// event id, windows by `(start, end)`.
pub fn run_event_study(
    series: &PriceSeries,
    events: &[EventSpec],
    cfg: &EstimationConfig,
) -> Result<Vec<EventOutcome>, StudyError> {
    cfg.validate()?;
    let returns = log_returns(series);
    let mut sorted: Vec<&EventSpec> = events.iter().collect();
    sorted.sort_by_key(|e| (e.id, e.event_time_ms));
    Ok(sorted
        .into_iter()
        .map(|event| {
            let result = returns
                .as_ref()
                .map_err(|e| StudyError::Series(e.clone()))
                .and_then(|r| analyze_event(series, r, event, cfg));
            match result {
                Ok(r) => EventOutcome::Analyzed(r),
                Err(reason) => EventOutcome::Skipped {
                    event_id: event.id,
                    reason,
                },
            }
        })
        .collect())
}
