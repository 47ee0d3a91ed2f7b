//! Crate-wide error type.

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An unknown name or unusable combination in the configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Metadata file missing, malformed or violating its invariants.
    #[error("metadata error: {0}")]
    Metadata(String),

    /// The stored check data does not follow the record grammar.
    #[error("check data format error at byte {offset}: {reason}")]
    CheckDataFormat { offset: usize, reason: String },

    /// Belief propagation stalled before recovering the user data.
    #[error("decode failure: {0}")]
    DecodeFailure(String),

    /// Neither fast nor conventional repair could restore the targets.
    #[error("repair failure: {0}")]
    RepairFailure(String),

    /// Parameter adjustment exhausted its iteration budget.
    #[error("parameter adjustment did not converge after {0} iterations")]
    NonConvergence(u64),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Exit code for the command-line tools: 1 for recoverable operation
    /// failures (decode/repair impossible), 2 for usage and parameter
    /// problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Metadata(_) => 2,
            Error::Io(_) => 3,
            _ => 1,
        }
    }
}
