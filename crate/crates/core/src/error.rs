use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: node {child} referenced before it was declared")]
    ForwardReference { line: usize, child: usize },

    #[error("line {line}: unknown node id {id}")]
    UnknownNode { line: usize, id: usize },

    #[error("line {line}: node {id} has non-positive weight {weight}")]
    NonPositiveWeight { line: usize, id: usize, weight: f64 },

    #[error("line {line}: node {id} has no children")]
    EmptyChildren { line: usize, id: usize },

    #[error("circuit has no root declaration")]
    MissingRoot,

    #[error("line {line}: variable {var} out of range for {num_vars} declared variables")]
    VariableOutOfRange { line: usize, var: usize, num_vars: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("assignment has length {got}, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("evidence has zero probability")]
    ZeroProbabilityEvidence,

    #[error("query dimension {0} exceeds the tabulation cap of {cap}", cap = crate::inference::TABULAR_CAP)]
    TooLarge(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
