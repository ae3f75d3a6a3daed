use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by moment construction, index evaluation and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("panel has {panel} rows but the dataset has {data} observations")]
    Conformance { panel: usize, data: usize },

    #[error("need at least 2 observations, got {0}")]
    DegenerateSample(usize),

    #[error("moment {index} has zero estimated variance")]
    DegenerateMoment { index: usize },

    #[error("covariance matrix is not positive definite")]
    Conditioning,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty point set")]
    EmptySet,

    #[error("replication {replication} failed in cell {cell}: {source}")]
    Replication {
        cell: String,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
