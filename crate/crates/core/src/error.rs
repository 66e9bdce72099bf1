use thiserror::Error;

/// Errors raised by the analysis, modelling and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("insufficient scales: need at least {needed}, got {got}")]
    InsufficientScales { needed: usize, got: usize },

    #[error("capacity exceeded: n = {n} is above the limit of {limit}")]
    CapacityExceeded { n: usize, limit: usize },

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("line {line}: {message}")]
    Ingest { line: u64, message: String },

    #[error("duplicate timestamp for turbine {turbine}: lines {first} and {second}")]
    DuplicateTimestamp {
        turbine: String,
        first: u64,
        second: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that come from the numerics (as opposed to the input data or config).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData(_)
                | Error::DegenerateSeries(_)
                | Error::InsufficientScales { .. }
                | Error::CapacityExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
