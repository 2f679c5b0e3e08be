use std::io;

use thiserror::Error;

use crate::scorer::ScoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("graph is empty after ingestion")]
    EmptyGraph,

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("unknown node label {0:?}")]
    UnknownLabel(String),

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("no linkable entities in question {0:?}")]
    NoLinkableEntities(String),

    #[error("reasoning path is empty")]
    EmptyPath,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Score(#[from] ScoreError),
}
