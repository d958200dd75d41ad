use thiserror::Error;

use crate::config::ConfigError;
use crate::filter::FilterError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Filter(#[from] FilterError),
    #[error("numerical failure: {0}")]
    Geometry(#[from] GeometryError),
    #[error("no samples in window [{start}, {end}] s")]
    EmptyWindow { start: f64, end: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed run csv: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) => 2,
            Error::Filter(_) | Error::Geometry(_) | Error::EmptyWindow { .. } => 3,
            Error::Parse(_) | Error::Csv(_) | Error::Io(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
