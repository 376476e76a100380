use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: field `{field}`: {message}")]
    Row {
        row: usize,
        field: String,
        message: String,
    },

    #[error("duplicate publication id {0:?}")]
    DuplicateId(String),

    #[error("input contains no records")]
    Empty,

    #[error("invalid country code {0:?} (expected two ASCII letters)")]
    CountryCode(String),

    #[error("undefined unit {0:?}")]
    UndefinedUnit(String),

    #[error("invalid unit definition {name:?}: {message}")]
    InvalidUnit { name: String, message: String },

    #[error("units {first:?} and {second:?} overlap on {country}; an exclusive partition needs disjoint units")]
    OverlappingUnits {
        first: String,
        second: String,
        country: String,
    },

    #[error("invalid percentile grid: {0}")]
    InvalidGrid(String),

    #[error("percentile {0} outside (0, 100]")]
    Percentile(f64),

    #[error("indicator undefined: {0}")]
    UndefinedIndicator(String),

    #[error("cumulative counts decrease: P_top10% = {p_top10} < P_top1% = {p_top1}")]
    NonCumulative { p_top10: f64, p_top1: f64 },

    #[error("power-law fit is not usable (status {0})")]
    FitUnusable(crate::powerlaw::FitStatus),

    #[error("invalid synthetic corpus specification: {0}")]
    Synth(String),

    #[error("malformed layer counts: {0}")]
    Counts(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn row(row: usize, field: &str, message: impl Into<String>) -> Self {
        Error::Row {
            row,
            field: field.to_owned(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
