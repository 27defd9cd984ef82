use thiserror::Error;

/// Errors produced by record ingestion, table construction, and hazard evaluation.
#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("timestamps are not strictly increasing at line {line}")]
    NonMonotoneTimestamps { line: usize },

    #[error("timestamp at line {line} is not on the one-minute grid")]
    OffGridTimestamp { line: usize },

    #[error("gap of {gap_minutes} minutes at line {line} exceeds policy ({max_minutes} minutes)")]
    GapExceedsPolicy {
        line: usize,
        gap_minutes: i64,
        max_minutes: i64,
    },

    #[error("record has {got} samples, fewer than the minimum of {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("record of {got} minutes is shorter than one tidal day ({need} minutes)")]
    ShorterThanTidalDay { got: usize, need: usize },

    #[error("constituent list is empty")]
    EmptyConstituents,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate stage value {0}")]
    DuplicateStage(f64),

    #[error("stage response needs at least {need} samples in this mode, got {got}")]
    TooFewStageSamples { need: usize, got: usize },

    #[error("gauge series has no positive crest")]
    NoPositiveCrest,

    #[error("invalid wave pattern: {0}")]
    InvalidPattern(String),

    #[error("window of {window} minutes does not fit in a record of {record} minutes")]
    WindowTooLong { window: usize, record: usize },

    #[error("invalid ccdf table: {0}")]
    InvalidTable(String),

    #[error("moments are undefined: probability mass {0} differs from 1 by more than 1e-6")]
    IncompleteMass(f64),

    #[error("record of {got} minutes is too large for the brute-force oracle (limit {limit})")]
    OracleGuard { got: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("datum ordering violated: {0}")]
    DatumOrdering(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown preset '{0}' (not a file, not on TIDEPROB_PRESET_PATH, not built in)")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
