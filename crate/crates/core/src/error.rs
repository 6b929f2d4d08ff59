use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("horizon {horizon} exceeds the addressable window (max {max})")]
    HorizonOverflow { horizon: usize, max: usize },

    #[error("occupancy count overflow at (t={t}, y={y})")]
    CountOverflow { t: usize, y: i64 },

    #[error("cell (t={t}, y={y}) is outside the stored window")]
    OutsideWindow { t: usize, y: i64 },

    #[error("cell (t={t}, y={y}) has zero occupancy")]
    DeadCell { t: usize, y: i64 },

    #[error("origin is unoccupied; the mass process is frozen at (0,0)")]
    EmptyOrigin,

    #[error("requested time {requested} exceeds environment horizon {horizon}")]
    BeyondHorizon { requested: usize, horizon: usize },

    #[error("path-sum oracle limited to t <= {max}, got {t}")]
    OracleTooDeep { t: usize, max: usize },

    #[error("invalid cell (t={t}, y={y}): {reason}")]
    InvalidCell { t: usize, y: i64, reason: String },

    #[error("bad magic bytes, not an environment file")]
    BadMagic,

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("truncated stream while reading {what}")]
    Truncated { what: &'static str },

    #[error("malformed stream: {0}")]
    Malformed(String),

    #[error("malformed difference path at index {index}: {reason}")]
    MalformedPath { index: usize, reason: String },

    #[error("mass not conserved at t={t}: total {total}")]
    Conservation { t: usize, total: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
