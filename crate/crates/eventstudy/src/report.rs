//! Report documents and their CSV / markdown renderings.
//!
//! Markdown mirrors the published layout: one column pair (CAR, t) per
//! event, one row per window. CSV carries one row per (event, window) with
//! raw decimals, preceded by `# key=value` metadata lines; [`parse_csv_report`]
//! reads it back.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use eventstudy_core::{EstimationConfig, EventOutcome, Significance, WindowSpec, WindowStats};

use crate::config::{apply, config_pairs};
use crate::error::{Error, Result};
use crate::reference::PublishedCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub symbol: String,
    pub span_start_ms: Option<i64>,
    pub span_end_ms: Option<i64>,
    pub config: EstimationConfig,
    pub tool_version: String,
}

impl ReportMeta {
    pub fn new(symbol: impl Into<String>, config: EstimationConfig) -> Self {
        Self {
            symbol: symbol.into(),
            span_start_ms: None,
            span_end_ms: None,
            config,
            tool_version: format!("eventstudy {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub event_id: u32,
    pub window: WindowSpec,
    pub cell: std::result::Result<WindowStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDoc {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

impl ReportDoc {
    /// One row per configured window for every event; skipped events get a
    /// failed row for each window.
    pub fn from_outcomes(outcomes: &[EventOutcome], meta: ReportMeta) -> Self {
        let mut windows = meta.config.car_windows.clone();
        windows.sort();
        let mut rows = Vec::new();
        for outcome in outcomes {
            match outcome {
                EventOutcome::Analyzed(r) => rows.extend(r.windows.iter().map(|w| ReportRow {
                    event_id: r.event_id,
                    window: w.window,
                    cell: w.result.clone().map_err(|e| e.to_string()),
                })),
                EventOutcome::Skipped { event_id, reason } => {
                    rows.extend(windows.iter().map(|&window| ReportRow {
                        event_id: *event_id,
                        window,
                        cell: Err(format!("skipped: {reason}")),
                    }))
                }
            }
        }
        rows.sort_by_key(|r| (r.event_id, r.window));
        Self { meta, rows }
    }
}

pub fn window_label(w: WindowSpec) -> String {
    format!("{} to {}", w.start(), w.end())
}

fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// `car` as a percentage with two decimals, e.g. `12.56%`.
pub fn format_percent(car: f64) -> String {
    format!("{}%", fixed2(car * 100.0))
}

/// `t` with two decimals and its stars, e.g. `4.42**`.
pub fn format_t(t: f64, significance: Significance) -> String {
    format!("{}{}", fixed2(t), significance.stars())
}

fn format_time(ms: i64) -> String {
    DateTime::<Utc>::from_timestamp_millis(ms)
        .map(|d| d.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_else(|| ms.to_string())
}

fn parse_time(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|d| d.timestamp_millis())
}

pub fn render_report(
    doc: &ReportDoc,
    format: Format,
    published: Option<&[PublishedCell]>,
) -> Result<String> {
    if doc.rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    Ok(match format {
        Format::Csv => render_csv(doc),
        Format::Markdown => render_markdown(doc, published),
    })
}

const CSV_HEADER: [&str; 12] = [
    "event_id",
    "window",
    "n",
    "car",
    "car_percent",
    "s_car",
    "t_stat",
    "df",
    "p_value",
    "stars",
    "threshold_flag",
    "status",
];

fn meta_pairs(meta: &ReportMeta) -> Vec<(String, String)> {
    let mut pairs = vec![("symbol".to_string(), meta.symbol.clone())];
    if let Some(s) = meta.span_start_ms {
        pairs.push(("span_start".into(), format_time(s)));
    }
    if let Some(e) = meta.span_end_ms {
        pairs.push(("span_end".into(), format_time(e)));
    }
    pairs.extend(
        config_pairs(&meta.config)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v)),
    );
    pairs.push(("tool".into(), meta.tool_version.clone()));
    pairs
}

fn render_csv(doc: &ReportDoc) -> String {
    let mut out = String::new();
    for (k, v) in meta_pairs(&doc.meta) {
        let _ = writeln!(out, "# {k}={v}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &doc.rows {
        let id = row.event_id.to_string();
        let window = row.window.to_string();
        let record: Vec<String> = match &row.cell {
            Ok(s) => vec![
                id,
                window,
                s.n.to_string(),
                s.car.to_string(),
                fixed2(s.car * 100.0),
                s.s_car.to_string(),
                s.t_stat.to_string(),
                s.df.to_string(),
                s.p_value.to_string(),
                s.significance.stars().to_string(),
                s.threshold_flag.to_string(),
                "ok".to_string(),
            ],
            Err(msg) => {
                let mut r = vec![id, window];
                r.extend(std::iter::repeat_n(String::new(), 9));
                r.push(msg.clone());
                r
            }
        };
        w.write_record(&record).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

fn render_markdown(doc: &ReportDoc, published: Option<&[PublishedCell]>) -> String {
    let meta = &doc.meta;
    let events: BTreeSet<u32> = doc.rows.iter().map(|r| r.event_id).collect();
    let windows: BTreeSet<WindowSpec> = doc.rows.iter().map(|r| r.window).collect();
    let lookup =
        |id: u32, w: WindowSpec| doc.rows.iter().find(|r| r.event_id == id && r.window == w);

    let mut out = String::from("# Cumulative abnormal returns\n\n");
    for (k, v) in meta_pairs(meta) {
        let _ = writeln!(out, "- {k}: {v}");
    }
    out.push('\n');

    table_header(&mut out, &events);
    for &w in &windows {
        let _ = write!(out, "| {} |", window_label(w));
        for &id in &events {
            match lookup(id, w).map(|r| &r.cell) {
                Some(Ok(s)) => {
                    let _ = write!(
                        out,
                        " {} | {} |",
                        format_percent(s.car),
                        format_t(s.t_stat, s.significance)
                    );
                }
                _ => out.push_str(" n/a | n/a |"),
            }
        }
        out.push('\n');
    }
    out.push_str("\nStars: * p < 0.10, ** p < 0.05, *** p < 0.01 (two-tailed t-test).\n");

    let threshold = meta.config.threshold;
    if threshold > 0.0 {
        let _ = writeln!(
            out,
            "\n## Threshold flags (|CAR| >= {})\n",
            format_percent(threshold)
        );
        let mut any = false;
        for &id in &events {
            let flagged: Vec<String> = doc
                .rows
                .iter()
                .filter(|r| r.event_id == id && matches!(&r.cell, Ok(s) if s.threshold_flag))
                .map(|r| window_label(r.window))
                .collect();
            if !flagged.is_empty() {
                any = true;
                let _ = writeln!(out, "- event {id}: {}", flagged.join(", "));
            }
        }
        if !any {
            out.push_str("- none\n");
        }
    } else {
        out.push_str("\nThreshold flagging disabled.\n");
    }

    let failures: Vec<&ReportRow> = doc.rows.iter().filter(|r| r.cell.is_err()).collect();
    if !failures.is_empty() {
        out.push_str("\n## Failures\n\n");
        for &id in &events {
            let rows: Vec<&&ReportRow> = failures.iter().filter(|r| r.event_id == id).collect();
            let msgs: BTreeSet<&str> = rows
                .iter()
                .filter_map(|r| r.cell.as_ref().err().map(String::as_str))
                .collect();
            let all_windows = rows.len() == windows.len();
            if all_windows && msgs.len() == 1 {
                let _ = writeln!(out, "- event {id}: {}", msgs.iter().next().unwrap());
            } else {
                for r in rows {
                    let _ = writeln!(
                        out,
                        "- event {id}, {}: {}",
                        window_label(r.window),
                        r.cell.as_ref().unwrap_err()
                    );
                }
            }
        }
    }

    if let Some(published) = published {
        render_published(&mut out, doc, &events, &windows, published);
    }
    out
}

fn table_header(out: &mut String, events: &BTreeSet<u32>) {
    out.push_str("| Window |");
    for id in events {
        let _ = write!(out, " event {id} CAR | event {id} t-statistic |");
    }
    out.push_str("\n| --- |");
    for _ in events {
        out.push_str(" ---: | ---: |");
    }
    out.push('\n');
}

fn render_published(
    out: &mut String,
    doc: &ReportDoc,
    events: &BTreeSet<u32>,
    windows: &BTreeSet<WindowSpec>,
    published: &[PublishedCell],
) {
    let find =
        |id: u32, w: WindowSpec| published.iter().find(|c| c.event_id == id && c.window == w);
    out.push_str("\n## Published values\n\n");
    table_header(out, events);
    for &w in windows {
        let _ = write!(out, "| {} |", window_label(w));
        for &id in events {
            match find(id, w) {
                Some(c) => {
                    let _ = write!(
                        out,
                        " {}% | {} |",
                        fixed2(c.car_percent),
                        format_t(c.t_stat, c.stars)
                    );
                }
                None => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    let mut diffs = Vec::new();
    for row in &doc.rows {
        if let (Ok(s), Some(c)) = (&row.cell, find(row.event_id, row.window)) {
            if s.significance != c.stars {
                diffs.push(format!(
                    "- event {}, {}: computed `{}`, published `{}`",
                    row.event_id,
                    window_label(row.window),
                    format_t(s.t_stat, s.significance),
                    format_t(c.t_stat, c.stars)
                ));
            }
        }
    }
    out.push_str("\n### Star mismatches\n\n");
    if diffs.is_empty() {
        out.push_str("- none\n");
    } else {
        for d in diffs {
            out.push_str(&d);
            out.push('\n');
        }
    }
}

/// Reads a CSV report written by [`render_report`].
pub fn parse_csv_report(text: &str) -> Result<ReportDoc> {
    let mut meta = ReportMeta::new("", EstimationConfig::default());
    let mut body_start = 0;
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else {
            body_start = i;
            break;
        };
        let line_no = i as u64 + 1;
        let (k, v) = rest.trim().split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "metadata line is not `# key=value`".into(),
        })?;
        match k {
            "symbol" => meta.symbol = v.to_string(),
            "span_start" => meta.span_start_ms = parse_time(v),
            "span_end" => meta.span_end_ms = parse_time(v),
            "tool" => meta.tool_version = v.to_string(),
            key => apply(&mut meta.config, key, v).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?,
        }
    }
    let body: String = text
        .lines()
        .skip(body_start)
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: body_start as u64 + 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: body_start as u64 + 1,
            message: "unexpected report header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = (body_start + i + 2) as u64;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        let event_id: u32 = rec[0].parse().map_err(|_| bad("event_id"))?;
        let window = crate::config::parse_window(&rec[1])?;
        let cell = if &rec[11] == "ok" {
            Ok(WindowStats {
                n: rec[2].parse().map_err(|_| bad("n"))?,
                car: rec[3].parse().map_err(|_| bad("car"))?,
                s_car: rec[5].parse().map_err(|_| bad("s_car"))?,
                t_stat: rec[6].parse().map_err(|_| bad("t_stat"))?,
                df: rec[7].parse().map_err(|_| bad("df"))?,
                p_value: rec[8].parse().map_err(|_| bad("p_value"))?,
                significance: Significance::from_stars(&rec[9]).ok_or_else(|| bad("stars"))?,
                threshold_flag: rec[10].parse().map_err(|_| bad("threshold_flag"))?,
            })
        } else {
            Err(rec[11].to_string())
        };
        rows.push(ReportRow {
            event_id,
            window,
            cell,
        });
    }
    Ok(ReportDoc { meta, rows })
}
