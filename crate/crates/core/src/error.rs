use thiserror::Error;

/// Everything that can go wrong while building inputs, integrating the flow
/// or post-processing a trajectory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid activation: {0}")]
    Activation(String),

    #[error("singular second-moment matrix")]
    SingularMoments,

    #[error("vanishing leading term: sum of rho*f(x)*x is zero")]
    VanishingLeadingTerm,

    #[error("dataset is not normalized (dev1 = {dev1:.3e}, dev2 = {dev2:.3e}, tolerance {tol:.1e})")]
    NotNormalized { dev1: f64, dev2: f64, tol: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("divergence at t = {t}: q_max = {q_max:.3e} exceeds {limit:.1e}")]
    Divergence { t: f64, q_max: f64, limit: f64 },

    #[error("risk increased at t = {t}: {previous:.12e} -> {current:.12e}")]
    NonMonotone { t: f64, previous: f64, current: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time axis is not strictly increasing at record {index}")]
    TimeAxis { index: usize },

    #[error("too few records: need {need}, got {got}")]
    TooFewRecords { need: usize, got: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numeric failures (divergence, NaN, non-monotone risk) as opposed to bad
    /// input. The CLI maps these to a distinct exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Divergence { .. } | Error::NonMonotone { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
