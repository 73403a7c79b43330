use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates a model invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Cache capacities do not fit in the content catalog.
    #[error("cache capacity overflow: {needed} contents requested but catalog holds {catalog}")]
    CapacityOverflow { needed: usize, catalog: usize },

    /// Special function evaluated at a pole.
    #[error("{function} has a pole at {at}")]
    Pole { function: &'static str, at: f64 },

    /// Distance below the reference distance where the path-loss model is undefined.
    #[error("distance {distance} m is below the reference distance {d0} m")]
    BelowReferenceDistance { distance: f64, d0: f64 },

    #[error("requested {requested} nearest base stations but only {available} exist")]
    NotEnoughStations { requested: usize, available: usize },

    /// A delay leg has nonzero probability but zero (or missing) rate.
    #[error("delay leg `{leg}` has probability {probability} but no usable rate")]
    MissingRate { leg: &'static str, probability: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
