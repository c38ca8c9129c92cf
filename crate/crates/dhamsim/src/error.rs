//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector dimensions do not match what an operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    InvalidDimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A state or rate vector contains NaN or infinite entries where finite
    /// values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A Hamiltonian or energy oracle returned a non-finite value.
    #[error("oracle failure: {0}")]
    OracleError(String),

    /// The requested operation is not defined for this dissipation kind.
    #[error("unsupported dissipation: {0}")]
    UnsupportedDissipation(&'static str),

    /// An argument lies outside the effective domain of the dissipation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A time-stepping run produced non-finite fields.
    #[error("numerical blowup at step {step} (t = {time})")]
    NumericalBlowup { step: usize, time: f64 },

    /// Malformed configuration document.
    #[error("parse error: {0}")]
    ParseError(String),

    /// Structurally valid configuration that violates the schema.
    #[error("schema error: {0}")]
    SchemaError(String),

    /// Filesystem failure, annotated with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 numerical, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParseError(_) | Error::SchemaError(_) => 2,
            Error::NumericalBlowup { .. } => 3,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
