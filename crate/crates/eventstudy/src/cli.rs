//! `eventstudy` command line.
//!
//! Exit codes: 0 success, 1 when some event or window failed (the report is
//! still written), 2 on hard errors and usage errors.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use clap::{Args, Parser, Subcommand, ValueEnum};
use eventstudy_core::{
    align_down, generate, run_event_study, EstimationConfig, EventOutcome, EventSpec, Shock,
    SynthSpec, MINUTE_MS,
};

use crate::cache::CandleCache;
use crate::candles_csv::{format_candles, load_candles_csv, load_candles_csv_as, write_atomic};
use crate::config::{parse_config, parse_df_mode, parse_windows};
use crate::error::{io_err, Error, Result};
use crate::events::load_events;
use crate::fetch::{FetchRequest, KlineClient, BASE_URL_ENV, DEFAULT_BASE_URL};
use crate::plot::emit_plot_data;
use crate::reference::published_table;
use crate::report::{parse_csv_report, render_report, Format, ReportDoc, ReportMeta};

#[derive(Debug, Parser)]
#[command(
    name = "eventstudy",
    version,
    about = "Minute-resolution event studies on exchange price series",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download one-minute klines into the per-day CSV cache.
    Fetch(FetchArgs),
    /// Run the event study and print a report.
    Analyze(AnalyzeArgs),
    /// Generate a seeded synthetic candle CSV.
    Synth(SynthArgs),
    /// Re-render a CSV report (from `analyze --format csv`).
    Report(ReportArgs),
    /// Write price/return series and event markers for external plotting.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Markdown,
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Markdown => Format::Markdown,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct NetArgs {
    /// Kline endpoint base URL.
    #[arg(long, env = BASE_URL_ENV, default_value = DEFAULT_BASE_URL)]
    base_url: String,
}

#[derive(Debug, Args)]
struct FetchArgs {
    #[arg(long)]
    symbol: String,
    /// Start (RFC 3339 or epoch ms), inclusive.
    #[arg(long)]
    start: String,
    /// End (RFC 3339 or epoch ms), exclusive.
    #[arg(long)]
    end: String,
    #[arg(long)]
    cache: PathBuf,
    /// Also write the requested span as a single candle CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    symbol: Option<String>,
    /// Events CSV (`id,event_time_rfc3339,label`).
    #[arg(long)]
    events: PathBuf,
    /// Per-day candle cache directory; missing days are fetched.
    #[arg(long, conflicts_with = "candles", required_unless_present = "candles")]
    cache: Option<PathBuf>,
    /// A single candle CSV instead of the cache.
    #[arg(long)]
    candles: Option<PathBuf>,
    /// Never touch the network; a cache miss is an error.
    #[arg(long)]
    offline: bool,
    /// `key = value` estimation config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Minutes added to every event time after parsing (e.g. -540 reads UTC stamps as KST).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    event_tz_shift: i64,
    #[arg(long)]
    threshold: Option<f64>,
    /// `window` (n - 1) or `estimation` (m - 2).
    #[arg(long)]
    df_mode: Option<String>,
    #[arg(long)]
    max_gap_fraction: Option<f64>,
    /// Comma-separated CAR windows, e.g. `0..5,0..10`.
    #[arg(long, allow_hyphen_values = true)]
    car_windows: Option<String>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: OutputFormat,
    /// Append the published CAR table and list star differences (markdown).
    #[arg(long)]
    annotate_paper: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of one-minute bars.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 0.002)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    start_price: f64,
    /// First bar open time (RFC 3339 or epoch ms).
    #[arg(long, default_value = "2021-01-01T00:00:00Z")]
    start_time: String,
    /// `OFFSET:MAGNITUDE` log-return shock; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    shock: Vec<String>,
    #[arg(long, default_value = "SYNTH")]
    symbol: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// CSV report written by `analyze --format csv`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: OutputFormat,
    #[arg(long)]
    annotate_paper: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Candle CSV, one per symbol (file stem is the symbol); repeatable.
    #[arg(long)]
    candles: Vec<PathBuf>,
    /// Cache directory, used with `--symbol`, `--start` and `--end`.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    symbol: Vec<String>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    end: Option<String>,
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    event_tz_shift: i64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    net: NetArgs,
}

fn parse_instant(s: &str) -> Result<i64> {
    if let Ok(ms) = s.parse::<i64>() {
        return Ok(ms);
    }
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.timestamp_millis())
        .map_err(|e| Error::Config(format!("`{s}` is neither epoch ms nor RFC 3339: {e}")))
}

fn parse_shock(s: &str) -> Result<Shock> {
    let (o, m) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("shock `{s}` is not OFFSET:MAGNITUDE")))?;
    Ok(Shock {
        offset_minute: o
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("shock offset `{o}` is not an integer")))?,
        magnitude: m
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("shock magnitude `{m}` is not a number")))?,
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(io_err("<stdout>"))
        }
    }
}

fn estimation_config(args: &AnalyzeArgs) -> Result<EstimationConfig> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path).map_err(io_err(path))?)?,
        None => EstimationConfig::default(),
    };
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if let Some(m) = &args.df_mode {
        cfg.df_mode = parse_df_mode(m)?;
    }
    if let Some(g) = args.max_gap_fraction {
        cfg.max_gap_fraction = g;
    }
    if let Some(w) = &args.car_windows {
        cfg.car_windows = parse_windows(w)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `[from, to)` of bars needed to analyse every event.
fn required_span(events: &[EventSpec], cfg: &EstimationConfig) -> Option<(i64, i64)> {
    let widest = cfg.car_windows.iter().map(|w| w.end()).max().unwrap_or(0);
    let from = events
        .iter()
        .map(|e| align_down(e.event_time_ms, MINUTE_MS) + (cfg.est_window.start() - 1) * MINUTE_MS)
        .min()?;
    let to = events
        .iter()
        .map(|e| align_down(e.event_time_ms, MINUTE_MS) + (widest + 1) * MINUTE_MS)
        .max()?;
    Some((from, to))
}

fn analyze(args: AnalyzeArgs) -> Result<i32> {
    let cfg = estimation_config(&args)?;
    let events = load_events(&args.events, args.event_tz_shift)?;
    let series = match (&args.candles, &args.cache) {
        (Some(path), _) => match &args.symbol {
            Some(sym) => load_candles_csv_as(path, sym)?,
            None => load_candles_csv(path)?,
        },
        (None, Some(dir)) => {
            let symbol = args
                .symbol
                .clone()
                .ok_or_else(|| Error::Config("--symbol is required with --cache".into()))?;
            let (from, to) = required_span(&events, &cfg).ok_or(Error::EmptyResults)?;
            let client = (!args.offline).then(|| KlineClient::new(&args.net.base_url));
            CandleCache::new(dir)
                .load_range(&symbol, from, to, client.as_ref())?
                .0
        }
        (None, None) => {
            return Err(Error::Config(
                "one of --cache or --candles is required".into(),
            ))
        }
    };

    let outcomes = run_event_study(&series, &events, &cfg)?;
    let mut meta = ReportMeta::new(series.symbol(), cfg);
    meta.span_start_ms = series.first_time_ms();
    meta.span_end_ms = series.last_time_ms();
    let doc = ReportDoc::from_outcomes(&outcomes, meta);
    let published = args.annotate_paper.then(published_table);
    let text = render_report(&doc, args.format.into(), published.as_deref())?;
    emit(args.out.as_deref(), text.as_bytes())?;
    Ok(if outcomes.iter().any(EventOutcome::has_failure) {
        1
    } else {
        0
    })
}

fn fetch(args: FetchArgs) -> Result<i32> {
    let (start, end) = (parse_instant(&args.start)?, parse_instant(&args.end)?);
    FetchRequest::new(&args.symbol, start, end)?;
    let client = KlineClient::new(&args.net.base_url);
    let cache = CandleCache::new(&args.cache);
    let (series, stats) = cache.load_range(&args.symbol, start, end, Some(&client))?;
    eprintln!(
        "{}: {} candles ({} days cached, {} fetched, {} gaps)",
        args.symbol,
        series.len(),
        stats.days_from_cache,
        stats.days_fetched,
        eventstudy_core::audit_gaps(&series).len()
    );
    if let Some(out) = &args.out {
        write_atomic(out, format_candles(&series).as_bytes())?;
    }
    Ok(0)
}

fn synth(args: SynthArgs) -> Result<i32> {
    let spec = SynthSpec {
        symbol: args.symbol,
        n_minutes: args.n,
        mu: args.mu,
        sigma: args.sigma,
        seed: args.seed,
        start_price: args.start_price,
        start_time_ms: parse_instant(&args.start_time)?,
        shocks: args
            .shock
            .iter()
            .map(|s| parse_shock(s))
            .collect::<Result<_>>()?,
    };
    let series = generate(&spec)?;
    emit(args.out.as_deref(), format_candles(&series).as_bytes())?;
    Ok(0)
}

fn report(args: ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.results).map_err(io_err(&args.results))?;
    let doc = parse_csv_report(&text)?;
    let published = args.annotate_paper.then(published_table);
    let rendered = render_report(&doc, args.format.into(), published.as_deref())?;
    emit(args.out.as_deref(), rendered.as_bytes())?;
    Ok(0)
}

fn plot_data(args: PlotArgs) -> Result<i32> {
    let events = match &args.events {
        Some(p) => load_events(p, args.event_tz_shift)?,
        None => Vec::new(),
    };
    let mut series = Vec::new();
    for path in &args.candles {
        series.push(load_candles_csv(path)?);
    }
    if let Some(dir) = &args.cache {
        let (Some(start), Some(end)) = (&args.start, &args.end) else {
            return Err(Error::Config("--cache needs --start and --end".into()));
        };
        let (start, end) = (parse_instant(start)?, parse_instant(end)?);
        let client = (!args.offline).then(|| KlineClient::new(&args.net.base_url));
        let cache = CandleCache::new(dir);
        for symbol in &args.symbol {
            series.push(cache.load_range(symbol, start, end, client.as_ref())?.0);
        }
    }
    if series.is_empty() {
        return Err(Error::Config(
            "no series given (--candles or --cache/--symbol)".into(),
        ));
    }
    for path in emit_plot_data(&series, &events, &args.out)? {
        println!("{}", path.display());
    }
    Ok(0)
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => 0,
                _ => 2,
            };
        }
    };
    let result = match cli.command {
        Command::Fetch(a) => fetch(a),
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
        Command::PlotData(a) => plot_data(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
