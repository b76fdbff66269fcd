use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("backward root must be scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("parameter `{0}` has no gradient")]
    MissingGrad(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scene {scene}: {reason}")]
    BadScene { scene: i64, reason: String },
    #[error("pedestrian {ped}: frames not strictly increasing")]
    NonMonotonicFrames { ped: i64 },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("scenario generator gave up after {0} attempts")]
    SynthExhausted(usize),
    #[error("model file: bad magic bytes")]
    BadMagic,
    #[error("model file: format version {found} (supported: {expected})")]
    BadVersion { found: u16, expected: u16 },
    #[error("model file: checksum mismatch")]
    ChecksumMismatch,
    #[error("model file: {0}")]
    Corrupt(String),
    #[error("non-finite loss (epoch {0})")]
    NonFiniteLoss(usize),
    #[error("non-finite values in {0}")]
    NonFiniteInput(&'static str),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
