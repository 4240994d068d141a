//! Error type shared by all modules.

/// Unified error for construction, validation, and numeric failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input fails a structural precondition (shape, normalization, range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Requested dimension is outside what a construction supports.
    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },

    /// Requested size exceeds the configured resource cap.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A basis that must be unbiased with respect to another is not.
    #[error("basis not unbiased: {0}")]
    NotUnbiased(String),

    /// An iterative routine stopped without reaching its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A numeric invariant (hermiticity, trace, positivity) is violated
    /// beyond tolerance.
    #[error("numeric check failed: {0}")]
    NumericCheck(String),

    /// Not enough data for a statistical verdict.
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    /// File I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed dump or table file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
