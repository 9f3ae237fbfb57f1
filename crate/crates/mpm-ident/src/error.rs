//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("inverted element: determinant {det} is not positive")]
    InvertedElement { det: f64 },

    #[error("incompressible limit: Poisson ratio {nu} must lie in (0, 0.5)")]
    IncompressibleLimit { nu: f64 },

    #[error("non-positive viscosity eta={eta} for {kind}")]
    NonPositiveViscosity { eta: f64, kind: &'static str },

    #[error("simulation blow-up: particle {particle} inverted at step {step} (det F = {det:.3e})")]
    BlowUp { particle: usize, step: usize, det: f64 },

    #[error("position {pos:?} outside the grid interior")]
    OutOfDomain { pos: [f64; 3] },

    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    ParseLine { path: String, line: usize, message: String },

    #[error("flow file format error in {path}: {message}")]
    FloFormat { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("snapshot id mismatch: {0}")]
    IdMismatch(String),

    #[error("loss kind `{0}` is not implemented; only `flow` is supported (render and SDS guidance are out of scope)")]
    LossNotImplemented(String),

    #[error("optimization failed at initialization: {0}; try a different prior")]
    BadInitialization(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {message}")]
    Json { path: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { path: path.into(), message: message.into() }
    }

    /// Process exit code for the command-line front end:
    /// 1 usage/missing-file, 2 validation/format, 3 runtime blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io { .. } => 1,
            Error::BlowUp { .. } | Error::BadInitialization(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
