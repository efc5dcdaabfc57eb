use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by meshing, assembly, solving and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("degenerate triangle (area {area:e})")]
    DegenerateTriangle { area: f64 },

    #[error("point ({x}, {y}) lies outside the cross-section")]
    OutsideDomain { x: f64, y: f64 },

    #[error("z = {z} lies outside [0, {length}]")]
    OutsideInterval { z: f64, length: f64 },

    #[error("no coefficient given for region {0}")]
    MissingCoefficient(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for degree {degree}")]
    ModeOutOfRange { mode: usize, degree: usize },

    #[error("invalid spectral mesh: {0}")]
    SpectralMesh(String),

    #[error("linear solver failed: {reason} (residual history: {history:?})")]
    Solver { reason: String, history: Vec<f64> },

    #[error("config error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn value(key: &str, message: impl Into<String>) -> Self {
        Error::ConfigValue { key: key.to_string(), message: message.into() }
    }
}
