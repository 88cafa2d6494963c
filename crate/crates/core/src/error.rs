use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate priors: all bags share the same class prior")]
    DegeneratePriors,

    #[error("prior sampling produced identical priors {0} times in a row")]
    PriorResampleExhausted(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("single-class pool: the labeled pool needs both positive and negative instances")]
    SingleClassPool,

    #[error("undefined AUC: input contains only one class")]
    UndefinedAuc,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("negative pair weight z[{i},{j}] = {z}")]
    NegativeWeight { i: usize, j: usize, z: f64 },

    #[error("at least one pair weight must be positive")]
    NoPositiveWeight,

    #[error("bag id {id} out of range 1..={m}")]
    BagIdOutOfRange { id: usize, m: usize },

    #[error("need at least 2 bags, got {0}")]
    TooFewBags(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("missing bag file {}", .0.display())]
    MissingBagFile(PathBuf),

    #[error("malformed data file {}: {msg}", path.display())]
    DataFile { path: PathBuf, msg: String },

    #[error("non-finite gradient in parameter tensor {tensor}")]
    NonFiniteGradient { tensor: usize },

    #[error("non-finite loss at epoch {epoch}; last finite model kept in checkpoint")]
    NonFiniteLoss {
        epoch: usize,
        checkpoint: Box<Vec<u8>>,
    },

    #[error("pair count {pairs} exceeds the configured cap {cap}")]
    PairCapExceeded { pairs: u64, cap: u64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
