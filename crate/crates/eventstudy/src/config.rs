//! `key = value` files mirroring every `EstimationConfig` field:
//!
//! ```text
//! est_window = -600..-60
//! car_windows = 0..5, 0..10, 0..30
//! threshold = 0.10
//! df_mode = window
//! max_gap_fraction = 0.05
//! ```
//!
//! Blank lines and `#` comments are ignored; unspecified keys keep defaults.

use eventstudy_core::{DfMode, EstimationConfig, WindowSpec};

use crate::error::{Error, Result};

pub fn parse_window(s: &str) -> Result<WindowSpec> {
    let (a, b) = s
        .trim()
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("window `{s}` is not `start..end`")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<i64>()
            .map_err(|_| Error::Config(format!("window `{s}` has a non-integer bound")))
    };
    Ok(WindowSpec::new(parse(a)?, parse(b)?)?)
}

pub fn parse_windows(s: &str) -> Result<Vec<WindowSpec>> {
    s.split(',')
        .filter(|w| !w.trim().is_empty())
        .map(parse_window)
        .collect()
}

pub fn parse_df_mode(s: &str) -> Result<DfMode> {
    DfMode::parse(s.trim())
        .ok_or_else(|| Error::Config(format!("df_mode `{s}` is not `window` or `estimation`")))
}

fn parse_fraction(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))
}

pub fn apply(cfg: &mut EstimationConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "est_window" => cfg.est_window = parse_window(value)?,
        "car_windows" => cfg.car_windows = parse_windows(value)?,
        "threshold" => cfg.threshold = parse_fraction(key, value)?,
        "df_mode" => cfg.df_mode = parse_df_mode(value)?,
        "max_gap_fraction" => cfg.max_gap_fraction = parse_fraction(key, value)?,
        other => return Err(Error::Config(format!("unknown key `{other}`"))),
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<EstimationConfig> {
    let mut cfg = EstimationConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        apply(&mut cfg, key.trim(), value)
            .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Ordered `(key, value)` pairs in the file syntax.
pub fn config_pairs(cfg: &EstimationConfig) -> Vec<(&'static str, String)> {
    vec![
        ("est_window", cfg.est_window.to_string()),
        (
            "car_windows",
            cfg.car_windows
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("threshold", cfg.threshold.to_string()),
        ("df_mode", cfg.df_mode.as_str().to_string()),
        ("max_gap_fraction", cfg.max_gap_fraction.to_string()),
    ]
}

pub fn render_config(cfg: &EstimationConfig) -> String {
    config_pairs(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}
