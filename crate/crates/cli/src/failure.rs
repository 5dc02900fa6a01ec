//! Exit-code classification.

use std::fmt;

use phri_core::PhriError;

/// 0 success, 1 usage or config, 2 data, 3 internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Usage,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Data,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Internal,
            error: error.into(),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn kind_of(e: &PhriError) -> ExitKind {
    use PhriError::*;
    match e {
        InvalidConfig(_) | InvalidWindow { .. } | InvalidFoldCount(_) | KOutOfRange { .. } | InvalidRange { .. } => {
            ExitKind::Usage
        }
        Parse { .. }
        | Io { .. }
        | Json(_)
        | Csv(_)
        | UnlabeledRecording(_)
        | EmptyTruncation { .. }
        | SeriesTooShort { .. }
        | InvalidTimeStep(_)
        | NegativeForce(_)
        | EmptyTrainingSet
        | ClassTooSmall { .. }
        | DimensionMismatch { .. }
        | LengthMismatch { .. } => ExitKind::Data,
        NoSelfStress { .. } | InvalidDistribution(_) => ExitKind::Internal,
    }
}

impl From<PhriError> for Failure {
    fn from(e: PhriError) -> Self {
        Self {
            kind: kind_of(&e),
            error: e.into(),
        }
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

/// Attaches an exit kind to foreign errors.
pub trait Classify<T> {
    fn usage_err(self) -> CmdResult<T>;
    fn data_err(self) -> CmdResult<T>;
    fn internal_err(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn usage_err(self) -> CmdResult<T> {
        self.map_err(Failure::usage)
    }

    fn data_err(self) -> CmdResult<T> {
        self.map_err(Failure::data)
    }

    fn internal_err(self) -> CmdResult<T> {
        self.map_err(Failure::internal)
    }
}
