use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{what} is capped at {max}, got {got}")]
    SizeCap {
        what: &'static str,
        max: usize,
        got: usize,
    },

    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveDefinite,

    #[error(
        "no latent draw satisfied the concentration event (rho = {rho}, count = {count}, d = {d}) \
         after {attempts} attempts"
    )]
    SRhoAttemptsExceeded {
        rho: f64,
        count: usize,
        d: usize,
        attempts: usize,
    },

    #[error("insufficient trials: need at least {need}, got {got}")]
    InsufficientTrials { need: usize, got: usize },

    #[error("unknown statistic `{0}`")]
    UnknownStatistic(String),

    #[error("statistic `{0}` needs the mask, which is hidden in unknown-mask mode")]
    MaskRequired(String),

    #[error("distributions live on different outcome spaces ({0} vs {1} outcomes)")]
    OutcomeSpaceMismatch(usize, usize),

    #[error("chi-square divergence undefined: reference has zero mass at outcome {0}")]
    SupportViolation(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
