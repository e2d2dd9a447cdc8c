use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected zone queried at t={now} before the record timestamp t0={timestamp}")]
    QueryBeforeRecord { now: f64, timestamp: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("cannot place zero vehicles")]
    NoVehicles,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid mobility parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
    #[error("trace is not uniformly sampled: {0}")]
    NonUniform(String),
    #[error("trace has {found} nodes but the configuration expects {expected}")]
    NodeCountMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("need at least two nodes for traffic, got {0}")]
    TooFewNodes(usize),
    #[error("requested {requested} flows but only {available} distinct ordered pairs exist")]
    TooManyFlows { requested: usize, available: usize },
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: cannot parse value `{value}` for key `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("cannot aggregate an empty list of reports")]
    Empty,
    #[error("reports mix scenarios or node counts: {0}")]
    Mixed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no data rows in {0}")]
    NoData(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
