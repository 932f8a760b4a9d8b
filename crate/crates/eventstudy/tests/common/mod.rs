//! A tiny single-threaded kline server for integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use eventstudy_core::Candle;

#[derive(Clone, Default)]
pub struct Behaviour {
    /// Answer 429 to this many requests before serving data.
    pub rate_limit_first: usize,
    /// Answer every request with this status and body.
    pub fixed_status: Option<(u16, String)>,
}

pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    queries: Arc<Mutex<Vec<HashMap<String, String>>>>,
}

impl MockServer {
    pub fn start(candles: Vec<Candle>, behaviour: Behaviour) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let queries = Arc::new(Mutex::new(Vec::new()));
        let (h, q) = (hits.clone(), queries.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                }
                let n = h.fetch_add(1, Ordering::SeqCst);
                let target = request_line.split_whitespace().nth(1).unwrap_or("");
                let params = parse_query(target);
                q.lock().unwrap().push(params.clone());

                let (status, body) = if let Some((s, b)) = &behaviour.fixed_status {
                    (*s, b.clone())
                } else if n < behaviour.rate_limit_first {
                    (
                        429,
                        r#"{"code":-1003,"msg":"Too many requests"}"#.to_string(),
                    )
                } else {
                    (200, page_json(&candles, &params))
                };
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        Self { url, hits, queries }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn queries(&self) -> Vec<HashMap<String, String>> {
        self.queries.lock().unwrap().clone()
    }
}

fn parse_query(target: &str) -> HashMap<String, String> {
    target
        .split_once('?')
        .map(|(_, q)| q)
        .unwrap_or("")
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn page_json(candles: &[Candle], params: &HashMap<String, String>) -> String {
    let get = |k: &str| params.get(k).and_then(|v| v.parse::<i64>().ok());
    let start = get("startTime").unwrap_or(i64::MIN);
    let end = get("endTime").unwrap_or(i64::MAX);
    let limit = get("limit").unwrap_or(500) as usize;
    let rows: Vec<String> = candles
        .iter()
        .filter(|c| c.open_time_ms >= start && c.open_time_ms <= end)
        .take(limit)
        .map(|c| {
            format!(
                r#"[{},"{}","{}","{}","{}","{}",{},"0",0,"0","0","0"]"#,
                c.open_time_ms,
                c.open,
                c.high,
                c.low,
                c.close,
                c.volume,
                c.open_time_ms + 59_999
            )
        })
        .collect();
    format!("[{}]", rows.join(","))
}
