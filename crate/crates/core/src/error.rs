use thiserror::Error;

#[derive(Debug, Error)]
pub enum HodgeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("neighbor count K={k} out of range for {n} points (need 1 <= K <= N-1)")]
    NeighborCount { k: usize, n: usize },

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("neighbor graph has no bandwidth set")]
    BandwidthUnset,

    #[error("degenerate neighborhood at point {0}: all singular values vanish")]
    DegenerateNeighborhood(usize),

    #[error("form order k={k} out of range for intrinsic dimension d={d}")]
    OrderOutOfRange { k: usize, d: usize },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min} vs largest {max}")]
    NotPositiveSemidefinite { min: f64, max: f64 },

    #[error("degenerate spectrum: leading eigenvalue is zero")]
    DegenerateSpectrum,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HodgeError>;
