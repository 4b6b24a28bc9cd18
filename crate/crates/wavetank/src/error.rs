use thiserror::Error;

/// Errors produced by the wavetank library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("boundary leak: {0}")]
    BoundaryLeak(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("ambiguous packet: {0}")]
    AmbiguousPacket(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("empty field")]
    EmptyField,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (config files, parameter
    /// values), as opposed to failures met while running the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
