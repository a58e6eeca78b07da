use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument violates its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A run configuration (grids, geometry, config file) is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested operation cannot be applied to the given data
    /// (wrong mode, missing arrays, mismatched metadata).
    #[error("data/mode mismatch: {0}")]
    DataMismatch(String),

    /// Input data are degenerate: empty sample sets, fully masked bands.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Detector/rotation geometry is (numerically) singular.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A linear system built from measurement data has a residual that is
    /// too large to be explained by rounding.
    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    /// A numerical step failed (singular matrix, detection failure, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line interface.
    /// 0 success, 2 configuration error, 3 data/mode mismatch,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Geometry(_) => 2,
            Error::DataMismatch(_) | Error::DegenerateData(_) => 3,
            Error::InconsistentData(_) | Error::Numerical(_) => 4,
            Error::Io(_) | Error::Json(_) => 2,
        }
    }
}
