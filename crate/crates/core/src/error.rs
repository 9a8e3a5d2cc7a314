use thiserror::Error;

/// Errors surfaced by configuration, trial setup and result files.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. The message
    /// names the offending field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Trial initialization failed (e.g. robot placement could not satisfy
    /// the separation constraint in an overcrowded custom arena).
    #[error("initialization error: {0}")]
    Init(String),

    /// A raw results file contains a record that cannot be parsed.
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: u64, message: String },

    /// A computation was asked of an empty sample.
    #[error("empty sample: {0}")]
    EmptySample(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
