mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{Behaviour, MockServer};
use eventstudy_core::{generate, SynthSpec};

const DAY0: i64 = 1_609_459_200_000; // 2021-01-01T00:00Z

const EVENTS: &str = "id,event_time_rfc3339,label
1,2021-01-01T11:40:00Z,first
2,2021-01-02T01:00:30Z,second
";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventstudy"))
        .args(args)
        .env_remove("EVENTSTUDY_BASE_URL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn no_args_prints_help_and_exits_2() {
    let o = bin(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_flag_exits_0() {
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_is_deterministic() {
    let args = [
        "synth", "--n", "2000", "--sigma", "0.002", "--shock", "601:0.15", "--seed", "7",
    ];
    let a = bin(&args);
    let b = bin(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 2001);
    assert!(text.starts_with("open_time_ms,open,high,low,close,volume\n1609459200000,"));
    let other = bin(&["synth", "--n", "2000", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn synth_rejects_bad_shock() {
    assert_eq!(
        bin(&["synth", "--n", "10", "--shock", "20:0.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&["synth", "--n", "10", "--shock", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn warm_cache_analyze_makes_no_requests() {
    let candles = generate(&SynthSpec {
        symbol: "SYNTHUSDT".into(),
        n_minutes: 3 * 1440,
        seed: 3,
        start_time_ms: DAY0,
        ..SynthSpec::default()
    })
    .unwrap()
    .into_candles();
    let server = MockServer::start(candles, Behaviour::default());
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache = cache.to_str().unwrap();
    let events = write(dir.path(), "events.csv", EVENTS);

    let f = bin(&[
        "fetch",
        "--symbol",
        "SYNTHUSDT",
        "--start",
        "2021-01-01T00:00:00Z",
        "--end",
        "2021-01-03T00:00:00Z",
        "--cache",
        cache,
        "--base-url",
        &server.url,
    ]);
    assert_eq!(
        f.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&f.stderr)
    );
    let warm_hits = server.hits();
    assert!(warm_hits >= 2);

    let a = bin(&[
        "analyze",
        "--symbol",
        "SYNTHUSDT",
        "--events",
        &events,
        "--cache",
        cache,
        "--base-url",
        &server.url,
    ]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(server.hits(), warm_hits);
    let md = stdout(&a);
    assert!(md.starts_with("# Cumulative abnormal returns\n"));
    assert!(md.contains(
        "| Window | event 1 CAR | event 1 t-statistic | event 2 CAR | event 2 t-statistic |"
    ));

    let offline = bin(&[
        "analyze",
        "--symbol",
        "SYNTHUSDT",
        "--events",
        &events,
        "--cache",
        cache,
        "--offline",
    ]);
    assert_eq!(offline.stdout, a.stdout);
}

#[test]
fn offline_cache_miss_is_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(dir.path(), "events.csv", EVENTS);
    let o = bin(&[
        "analyze",
        "--symbol",
        "X",
        "--events",
        &events,
        "--cache",
        dir.path().join("empty").to_str().unwrap(),
        "--offline",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not cached"));
}

fn synth_candles(dir: &Path, n: &str) -> String {
    let path = dir.join("SYNTH.csv");
    let o = bin(&[
        "synth",
        "--n",
        n,
        "--seed",
        "1",
        "--shock",
        "701:0.15",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    path.to_str().unwrap().to_string()
}

#[test]
fn uncovered_event_is_a_soft_failure() {
    let dir = tempfile::tempdir().unwrap();
    let candles = synth_candles(dir.path(), "2000");
    // event 2 sits 100 minutes into the data, without an estimation window
    let events = write(
        dir.path(),
        "events.csv",
        "id,event_time_rfc3339,label\n1,2021-01-01T11:40:00Z,ok\n2,2021-01-01T01:40:00Z,early\n",
    );
    let o = bin(&["analyze", "--events", &events, "--candles", &candles]);
    assert_eq!(o.status.code(), Some(1));
    let md = stdout(&o);
    assert!(md.contains("## Failures"));
    assert!(md.contains("event 2"));
}

#[test]
fn csv_report_rerenders_identically() {
    let dir = tempfile::tempdir().unwrap();
    let candles = synth_candles(dir.path(), "2000");
    let events = write(
        dir.path(),
        "events.csv",
        "id,event_time_rfc3339,label\n1,2021-01-01T11:40:00Z,shock\n",
    );
    let md = bin(&["analyze", "--events", &events, "--candles", &candles]);
    let csv = bin(&[
        "analyze",
        "--events",
        &events,
        "--candles",
        &candles,
        "--format",
        "csv",
    ]);
    assert_eq!(md.status.code(), Some(0));
    let results = write(dir.path(), "results.csv", &stdout(&csv));
    let again = bin(&["report", "--results", &results]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), stdout(&md));
    let csv_again = bin(&["report", "--results", &results, "--format", "csv"]);
    assert_eq!(csv_again.stdout, csv.stdout);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let candles = synth_candles(dir.path(), "2000");
    let events = write(
        dir.path(),
        "events.csv",
        "id,event_time_rfc3339,label\n1,2021-01-01T11:40:00Z,shock\n",
    );
    let config = write(
        dir.path(),
        "study.conf",
        "# short study\nest_window = -600..-60\ncar_windows = 0..5\nthreshold = 0\ndf_mode = estimation\nmax_gap_fraction = 0.05\n",
    );
    let o = bin(&[
        "analyze",
        "--events",
        &events,
        "--candles",
        &candles,
        "--config",
        &config,
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# df_mode=estimation"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("1,0..5,5,"));
    assert!(rows[1].contains(",539,"));

    let bad = write(dir.path(), "bad.conf", "est_window = -60..-600\n");
    assert_eq!(
        bin(&[
            "analyze",
            "--events",
            &events,
            "--candles",
            &candles,
            "--config",
            &bad
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        bin(&[
            "analyze",
            "--events",
            &events,
            "--candles",
            &candles,
            "--df-mode",
            "bogus"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn plot_data_writes_series_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let candles = synth_candles(dir.path(), "1000");
    let out = dir.path().join("plots");
    let o = bin(&[
        "plot-data",
        "--candles",
        &candles,
        "--events",
        &write(dir.path(), "events.csv", EVENTS),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let series = fs::read_to_string(out.join("SYNTH.csv")).unwrap();
    assert_eq!(series.lines().count(), 1001);
    assert_eq!(
        fs::read_to_string(out.join("events.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}
