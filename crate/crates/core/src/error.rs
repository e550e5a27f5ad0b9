use alloc::string::String;
use core::fmt;

/// Errors raised by the construction and its supporting types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    ZeroDenominator,
    DivisionByZero,
    Parse {
        what: &'static str,
        input: String,
    },
    /// A run configuration was rejected before any work started.
    Config(String),
    /// An internal invariant of the construction was violated; the run halts.
    Invariant(String),
    /// A snapshot document could not be accepted.
    Snapshot(String),
    /// An operation was asked to go past a supported bound.
    Bound(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroDenominator => f.write_str("zero denominator"),
            Error::DivisionByZero => f.write_str("division by zero"),
            Error::Parse { what, input } => write!(f, "cannot parse {} from {:?}", what, input),
            Error::Config(m) => write!(f, "invalid configuration: {}", m),
            Error::Invariant(m) => write!(f, "invariant violated: {}", m),
            Error::Snapshot(m) => write!(f, "snapshot rejected: {}", m),
            Error::Bound(m) => write!(f, "out of bounds: {}", m),
        }
    }
}

impl core::error::Error for Error {}
