use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate {value} at axis {axis}")]
    NonFinite { axis: usize, value: f64 },

    #[error("query on an empty point set")]
    Empty,

    #[error("level {level} is incomplete: {reason}")]
    IncompleteLevel { level: usize, reason: String },

    #[error("horizon too small: need rho*log(T) >= {needed}, replica {replica} has {available}")]
    HorizonTooSmall {
        needed: f64,
        available: f64,
        replica: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate statistics: {0}")]
    Degenerate(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("birth time overflow: {0} exceeds the representable horizon")]
    TimeOverflow(f64),

    #[error("rejection guard exceeded after {rejections} proposals at point {index}")]
    RejectionGuard {
        index: usize,
        rejections: u64,
        stats: crate::agora::AgoraStats,
    },

    #[error("generation failed at point {}: {source}", partial.len())]
    Partial {
        partial: Box<crate::agora::PointTree>,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported plot: {0}")]
    UnsupportedPlot(String),

    #[error("{path}:{line}: {msg}")]
    Schema {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::NonFinite { .. }
                | Error::UnsupportedPlot(_)
                | Error::Schema { .. }
                | Error::InsufficientData(_)
                | Error::HorizonTooSmall { .. }
        )
    }
}
