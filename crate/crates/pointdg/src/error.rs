//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid axis {axis} for rank-{rank} tensor")]
    InvalidAxis { axis: usize, rank: usize },
    #[error("backward requires a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("invalid step {step} for schedule of {total} steps")]
    InvalidStep { step: usize, total: usize },
    #[error("channel count {0} is not divisible by 4")]
    ChannelsNotDivisibleBy4(usize),
    #[error("non-finite coordinate at point {0}")]
    NonFiniteCoordinate(usize),
    #[error("k={k} too large for {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("cannot downsample {n} points to m={m}")]
    MTooLarge { m: usize, n: usize },
    #[error("need at least 2 rows for covariance, got {0}")]
    TooFewRows(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("coordinate out of [-1,1] range at point {0}")]
    CoordOutOfRange(usize),
    #[error("unknown shape class: {0}")]
    UnknownClass(String),
    #[error("degenerate cloud: all points coincide")]
    DegenerateCloud,
    #[error("parse error at {path}:{line}: {msg}")]
    ParseError {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("point count mismatch: header says {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),
    #[error("checkpoint does not match config: {0}")]
    CheckpointMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("refusing to overwrite {0}; pass --force to replace it")]
    WouldOverwrite(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code class: 2 for IO failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::WouldOverwrite(_) => 2,
            _ => 1,
        }
    }
}
