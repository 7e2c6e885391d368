use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("network generation failed: {0}")]
    Generation(#[from] crate::netgen::GenerationFailure),

    #[error("homophily undefined: no early adopter has any neighbor")]
    UndefinedHomophily,

    #[error("cannot seed {requested} agents in city {city_id}: only {available} susceptible")]
    SeedOversubscribed {
        city_id: u32,
        requested: usize,
        available: usize,
    },

    #[error("media series has {len} weeks, week {week} requested")]
    MediaOutOfRange { week: usize, len: usize },

    #[error("classification needs at least 2 adoption times, got {0}")]
    TooFewTimes(usize),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Validation-class failures map to CLI exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Config { .. }
                | Error::SeedOversubscribed { .. }
        )
    }
}
