use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("prior is not a probability vector: {0}")]
    NonSimplexPrior(String),

    #[error("no unique default action at the prior (best margin {margin:e})")]
    NoUniqueDefault { margin: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid signaling scheme: {0}")]
    InvalidScheme(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("signal `{0}` has zero probability")]
    ZeroProbabilitySignal(String),

    #[error("bias level {0} outside [0, 1]")]
    OutOfRangeBias(f64),

    #[error("threshold {0} outside (0, 1)")]
    OutOfRangeThreshold(f64),

    #[error("posteriors do not average to the prior (residual {residual:e})")]
    InconsistentSplit { residual: f64 },

    #[error("bias threshold {tau} is not testable")]
    Untestable { tau: f64 },

    #[error("design verification failed: {}", .violations.join("; "))]
    VerificationFailed { violations: Vec<String> },

    #[error("the default action has no gap vector")]
    DefaultActionGap,

    #[error("LP feasibility and indifference-set emptiness disagree at tau = {tau}")]
    InconsistentClassification { tau: f64 },

    #[error("belief path crosses the default region boundary {crossings} times")]
    NotSingleCrossing { crossings: usize },

    #[error("no useful signal within {max_steps} steps")]
    Timeout { max_steps: usize },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("no threshold is testable for this instance")]
    NothingTestable,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Lp(#[from] LpError),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
