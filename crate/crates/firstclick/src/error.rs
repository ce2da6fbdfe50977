//! Error taxonomy shared by the whole crate.
//!
//! The CLI maps these onto exit codes: configuration problems exit with 2,
//! physics-consistency failures and I/O problems exit with 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (grid shape, detector placement, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its contract (mismatched grids,
    /// wrong detector kind, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A packet's support does not fit the spatial grid with a safe margin.
    #[error("packet escapes grid: {0}")]
    PacketEscapesGrid(String),

    /// Too much amplitude reached the guard band, so periodic wrap-around
    /// would corrupt the run.
    #[error(
        "wrap-around guard tripped: guard-band occupancy {leaked:.3e} exceeds {limit:.1e}; \
         enlarge the grid or the padding"
    )]
    WrapAroundGuard { leaked: f64, limit: f64 },

    /// The detection-history bookkeeping no longer sums to unit probability.
    #[error(
        "internal consistency failure: click weights + survival deviate from 1 \
         by {residual:.3e} (escaped mass {escaped:.3e})"
    )]
    ConsistencyFailure { residual: f64, escaped: f64 },

    /// The arrival probability inside the window is numerically zero, so the
    /// conditional distribution is undefined.
    #[error("particle never reaches detector: normalization integral {0:.3e}")]
    NeverReachesDetector(f64),

    /// One or more built-in invariant checks failed.
    #[error("{0} invariant check(s) failed")]
    ChecksFailed(usize),

    /// Config-file rejection with the offending key and line.
    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI should report for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
