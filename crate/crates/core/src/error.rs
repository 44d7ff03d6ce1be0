use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A row or object could not be decoded. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Timestamps not strictly increasing at the given sample index.
    #[error("sample {index}: timestamp {t} does not exceed previous {previous}")]
    NonIncreasingTime { index: usize, t: f64, previous: f64 },

    #[error("series of length {len} is shorter than the required {min}")]
    TooShort { len: usize, min: usize },

    /// An argument outside the operation's domain.
    #[error("{0}")]
    Domain(String),

    #[error("linear system is singular or not positive definite (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("no convergence after {sweeps} sweeps (largest KKT violation {violation:e})")]
    Convergence { sweeps: usize, violation: f64 },

    /// A structured document (profile, manifest, classifier) is malformed.
    #[error("invalid document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
