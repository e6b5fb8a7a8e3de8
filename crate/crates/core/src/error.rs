use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("degenerate support: density estimation needs at least two distinct values")]
    DegenerateSupport,

    #[error("density estimates are not defined on the same grid")]
    GridMismatch,

    #[error("invalid discrete distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("income at position {index} must be positive, got {value}")]
    NonPositiveIncome { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("percentile table must have 101 entries, got {0}")]
    TableLength(usize),

    #[error("percentile table decreases at percentiles {0:?}")]
    NonMonotoneTable(Vec<usize>),

    #[error("k-means failed: {0}")]
    Clustering(String),

    #[error("derived cut-points are not strictly increasing: {0:?}")]
    NonMonotoneCutPoints(Vec<f64>),

    #[error("config error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::DegenerateSupport
            | Error::GridMismatch
            | Error::Clustering(_)
            | Error::NonMonotoneCutPoints(_) => 3,
            _ => 1,
        }
    }
}
