use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// The variants are grouped so that front ends can map them onto a small set
/// of exit statuses (see [`Error::class`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}, {k}) is outside a grid of dims {dims:?}")]
    OutOfBounds {
        i: i64,
        j: i64,
        k: i64,
        dims: [usize; 3],
    },

    #[error("invalid spacing {0:?}: every component must be finite and > 0")]
    InvalidSpacing([f64; 3]),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("{0}")]
    InvalidMode(String),

    #[error("value outside the domain: {0}")]
    Domain(String),

    #[error("insufficient sample: {0}")]
    SampleSize(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("predictor contract violated at window offset {offset:?}: {reason}")]
    Contract { offset: [usize; 3], reason: String },

    #[error("{path}: missing mandatory header key `{key}`")]
    MissingKey { path: PathBuf, key: &'static str },

    #[error("{path}: malformed header: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: unsupported rank NDims = {ndims}, only 3D volumes are supported")]
    UnsupportedRank { path: PathBuf, ndims: usize },

    #[error("{path}: unsupported orientation, TransformMatrix must be the identity")]
    UnsupportedOrientation { path: PathBuf },

    #[error("{path}: unsupported MetaImage feature: {what}")]
    Unsupported { path: PathBuf, what: String },

    #[error("{path}: raw payload has {actual} bytes, expected {expected}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("value {value} cannot be represented as {element_type}")]
    Representation { value: f64, element_type: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report serialization failed: {0}")]
    Serialize(String),
}

/// Coarse error categories used for process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments or configuration.
    Usage,
    /// Reading or writing files, including malformed input files.
    Io,
    /// Geometry, domain or sample-size problems in the data.
    Data,
    /// A predictor broke its output contract.
    Contract,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidMode(_) | Error::InvalidSpacing(_) => ErrorClass::Usage,
            Error::MissingKey { .. }
            | Error::Parse { .. }
            | Error::UnsupportedRank { .. }
            | Error::UnsupportedOrientation { .. }
            | Error::Unsupported { .. }
            | Error::Truncated { .. }
            | Error::Io { .. }
            | Error::Serialize(_) => ErrorClass::Io,
            Error::OutOfBounds { .. }
            | Error::Geometry(_)
            | Error::Domain(_)
            | Error::SampleSize(_)
            | Error::Representation { .. } => ErrorClass::Data,
            Error::Contract { .. } => ErrorClass::Contract,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
