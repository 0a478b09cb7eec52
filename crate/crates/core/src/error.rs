//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the engine and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration violates a parameter bound.
    #[error("invalid config: {0}")]
    Config(String),

    /// Two descriptors (or a descriptor and the session) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A descriptor component is NaN or infinite.
    #[error("descriptor contains a non-finite component")]
    NonFinite,

    /// A descriptor with zero norm cannot be L2-normalized.
    #[error("cannot normalize a zero-norm descriptor")]
    ZeroNorm,

    /// A two-nearest search needs at least two candidate points.
    #[error("two-nearest search needs at least 2 points, got {got}")]
    InsufficientPoints { got: usize },

    /// Frame indices must be strictly increasing along a stream.
    #[error("frame index {frame} is not ahead of the stream clock {clock}")]
    StreamOrder { clock: u64, frame: u64 },

    /// A precondition on an argument was violated.
    #[error("{0}")]
    InvalidArgument(String),

    /// The byte buffer is not a snapshot.
    #[error("not a snapshot: bad magic")]
    SnapshotMagic,

    /// The snapshot was written by an unsupported format version.
    #[error("unsupported snapshot version {0}")]
    SnapshotVersion(u32),

    /// The snapshot is truncated or internally inconsistent.
    #[error("snapshot is truncated or corrupt: {0}")]
    SnapshotCorrupt(String),

    /// The snapshot was produced under a different configuration.
    #[error("snapshot config does not match the session config")]
    SnapshotConfigMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
