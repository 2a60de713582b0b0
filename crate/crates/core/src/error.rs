use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The mosquito threshold r is at or below 1, so only the extinction
    /// equilibrium exists.
    #[error("mosquito threshold r = {r} must exceed 1")]
    SubcriticalVector { r: f64 },

    #[error("population must be positive, got {0}")]
    EmptyPopulation(f64),

    #[error("duplicate coordinates for nodes {first} and {second} at ({x}, {y})")]
    DuplicateCoordinates {
        first: usize,
        second: usize,
        x: f64,
        y: f64,
    },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("node index {index} out of range for {count} nodes")]
    NodeOutOfRange { index: usize, count: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("insufficient susceptibles at node {node}: have {available}, need {requested}")]
    InsufficientSusceptibles {
        node: usize,
        available: f64,
        requested: f64,
    },

    #[error("non-finite value at t = {t} in node {node} compartment {compartment}")]
    NonFinite {
        t: f64,
        node: usize,
        compartment: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
