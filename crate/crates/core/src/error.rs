use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 6 points (4 interior + 2 ghosts), got {0}")]
    GridTooSmall(usize),

    #[error("index {index} is not an interior point of a grid with {n_total} points")]
    NotInterior { index: usize, n_total: usize },

    #[error("expected a field of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("corseting parameter lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("time step must be non-negative and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("non-finite field values after step to t = {t_attempted} (last finite t = {t_last})")]
    NonFinite { t_last: f64, t_attempted: f64 },

    #[error("bracket endpoint lambda = {lambda} classified {found}, expected {expected}")]
    BadBracket {
        lambda: f64,
        found: &'static str,
        expected: &'static str,
    },

    #[error("{what} line {line}: {reason}")]
    Syntax {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
