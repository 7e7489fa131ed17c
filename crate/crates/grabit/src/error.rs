use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sigma must be a positive finite number, got {0}")]
    InvalidSigma(f64),
    #[error("censoring bounds require lower < upper, got [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("response {y} lies outside the censoring bounds [{lower}, {upper}]")]
    ResponseOutsideBounds { y: f64, lower: f64, upper: f64 },
    #[error("binary response must be 0 or 1, got {0}")]
    NonBinaryResponse(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("no interior (uncensored) observations; sigma is not identified")]
    NoInteriorObservations,
    #[error("operation requires a Tobit model with a finite upper bound")]
    NotTobitUpper,
    #[error("degenerate interval of zero width for variable {0}")]
    DegenerateInterval(usize),
    #[error("profile likelihood is non-finite at every grid point")]
    NoFiniteGridPoint,
    #[error("no row has enough mature past observations to score")]
    EmptyTemporalResult,
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("model file error: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
