use thiserror::Error;

/// Failures when decoding a cube or netpbm file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated payload: header promises {expected} bytes, file holds {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("payload size mismatch: header promises {expected} bytes, file holds {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("malformed header: {0}")]
    Malformed(String),
}

impl FormatError {
    /// Stable numeric code, one per variant.
    pub fn code(&self) -> u8 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::UnsupportedVersion(_) => 2,
            FormatError::Truncated { .. } => 3,
            FormatError::SizeMismatch { .. } => 4,
            FormatError::Malformed(_) => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate illumination: illumination x sensor integrates to zero")]
    DegenerateIllumination,
    #[error("unsupported capability: {0}")]
    UnsupportedCapability(String),
    #[error("no illumination: no LED is energized")]
    NoIllumination,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no lattice found along {axis}: peak score {score:.3} below threshold {threshold:.3}")]
    NoLatticeFound {
        axis: char,
        score: f64,
        threshold: f64,
    },
    #[error("format error: {0}")]
    Format(#[from] FormatError),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line frontend:
    /// 2 for data/format problems, 3 for pipeline failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Format(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::DegenerateIllumination
            | Error::UnsupportedCapability(_)
            | Error::NoIllumination
            | Error::InsufficientData(_)
            | Error::NoLatticeFound { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
