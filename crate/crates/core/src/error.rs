//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by model construction, simulation, and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidInput(String),
    /// A numerical routine failed; the message carries condition diagnostics.
    Numerical(String),
    /// A column had no variation where variation is required.
    DegenerateColumn(String),
    /// The sampler could not form a finite likelihood at its starting state.
    Initialization(String),
    /// Coefficient of variation is undefined (zero mean).
    UndefinedCv,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::DegenerateColumn(msg) => write!(f, "degenerate column: {msg}"),
            Error::Initialization(msg) => write!(f, "initialization error: {msg}"),
            Error::UndefinedCv => {
                write!(f, "coefficient of variation is undefined for zero mean")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
