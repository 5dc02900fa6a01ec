use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::InteractionClass;

pub type Result<T, E = PhriError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PhriError {
    #[error("no frames fall in [{start_s}, {end_s}) s")]
    EmptyTruncation { start_s: f64, end_s: f64 },

    #[error("invalid time range [{start_s}, {end_s})")]
    InvalidRange { start_s: f64, end_s: f64 },

    #[error("recording `{0}` has no label")]
    UnlabeledRecording(String),

    #[error("invalid window: size {window_size}, stride {stride}")]
    InvalidWindow { window_size: usize, stride: usize },

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("non-positive time step {0}")]
    InvalidTimeStep(f64),

    #[error("negative force {0} N")]
    NegativeForce(f64),

    #[error("geometry admits no self-stress (smallest singular value ratio {ratio:e})")]
    NoSelfStress { ratio: f64 },

    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k = {k} out of range for {n} training samples")]
    KOutOfRange { k: usize, n: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("class {class} has {count} members, need at least {needed}")]
    ClassTooSmall {
        class: InteractionClass,
        count: usize,
        needed: usize,
    },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid fold count {0} (need k >= 2)")]
    InvalidFoldCount(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PhriError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PhriError::Io {
            path: path.into(),
            source,
        }
    }
}
