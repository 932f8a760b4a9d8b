use std::path::PathBuf;

use eventstudy_core::{SeriesError, StudyError, SynthError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {source}")]
    InvariantViolation {
        line: u64,
        #[source]
        source: SeriesError,
    },
    #[error("duplicate event id {0}")]
    DuplicateId(u32),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("venue returned no candles for {symbol} in {start_ms}..{end_ms}")]
    EmptySeries {
        symbol: String,
        start_ms: i64,
        end_ms: i64,
    },
    #[error("no results to render")]
    EmptyResults,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
