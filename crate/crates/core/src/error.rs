use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time series must contain at least one observation")]
    EmptySeries,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("sample too short for chosen s: n = {n}, s = {s} gives block length {block_len} and {block_count} blocks")]
    SampleTooShort {
        n: usize,
        s: f64,
        block_len: usize,
        block_count: usize,
    },

    #[error("series too short to difference (n = {0})")]
    SeriesTooShort(usize),

    #[error("lag exceeds series length (lag = {lag}, n = {n})")]
    LagExceedsLength { lag: usize, n: usize },

    #[error("degenerate block {block}: log variance undefined")]
    DegenerateBlock { block: usize },

    #[error("need at least two blocks, got {0}")]
    NeedTwoBlocks(usize),

    #[error("long-run variance estimate is zero")]
    ZeroLongRunVariance,

    #[error("constant input: centered variance is zero")]
    ConstantInput,

    #[error("q must be smaller than s (q = {q}, s = {s})")]
    QNotBelowS { q: f64, s: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonstationary noise spec: {0}")]
    Nonstationary(String),

    #[error("window of length {window} too short for margin {margin}")]
    WindowTooShort { window: usize, margin: usize },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the data or the statistical procedure, as opposed to
    /// unreadable or malformed input.
    pub fn is_statistical(&self) -> bool {
        match self {
            Error::SampleTooShort { .. }
            | Error::DegenerateBlock { .. }
            | Error::NeedTwoBlocks(_)
            | Error::ZeroLongRunVariance
            | Error::ConstantInput
            | Error::SeriesTooShort(_)
            | Error::LagExceedsLength { .. }
            | Error::WindowTooShort { .. } => true,
            Error::Replication { source, .. } => source.is_statistical(),
            _ => false,
        }
    }
}
