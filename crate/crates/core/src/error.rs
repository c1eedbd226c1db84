use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("no samples: {0}")]
    NoSamples(String),

    #[error("brute-force matching supports at most {max} vertices, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix is not symmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },

    #[error("matrix diagonal entry {i} is set")]
    InvalidDiagonal { i: usize },

    #[error("truncation too tight: boundary mass {mass:e} exceeds {limit:e}")]
    TruncationTooTight { mass: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
