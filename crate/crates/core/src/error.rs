use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient bits: needed {needed}, available {available}")]
    InsufficientBits { needed: u128, available: u128 },

    #[error("unknown compressor `{0}`")]
    UnknownCompressor(String),

    #[error("code length mismatch: declared length {declared}, word has {actual} bits")]
    LengthMismatch { declared: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("not a C_n walk: {0}")]
    NotAWalk(String),

    #[error("t = {0} lies outside [0, 1]")]
    OutOfDomain(String),

    #[error("precision 2^-{requested} unattainable (at most 2^-{max} at this depth)")]
    PrecisionUnattainable { requested: u32, max: u32 },

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("level {level} outside supported range {min}..={max}")]
    LevelOutOfRange { level: u32, min: u32, max: u32 },

    #[error("precision 2^-{precision} needs level >= {required_level}")]
    LevelInsufficient { precision: u32, required_level: u32 },

    #[error("frequencies cover {found} dyadic annuli, need at least {required}")]
    TooFewAnnuli { found: usize, required: usize },

    #[error("frequency grid is not symmetric about 0")]
    AsymmetricGrid,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no interior detected at this resolution")]
    NoInterior,

    #[error("tolerance {tolerance:e} incompatible with interval widths (need > {required:e})")]
    ToleranceIncompatible { tolerance: f64, required: f64 },

    #[error("insufficient minimizers: need {needed}, found {found}")]
    InsufficientMinimizers { needed: usize, found: usize },

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
