use thiserror::Error;

/// Errors raised by the selection, analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid round outcome: {0}")]
    InvalidOutcome(String),

    #[error("invalid client state: {0}")]
    InvalidState(String),

    #[error("chain has no stationary distribution: the maximum-age state is reachable and absorbing")]
    NoStationaryDistribution,

    #[error("peak age has infinite mean: the maximum-age state is reachable and absorbing")]
    InfiniteMean,

    #[error("no monotone chain reaches selection rate {target}; achievable range is ({min}, {max}]")]
    InfeasibleCalibration { target: f64, min: f64, max: f64 },

    #[error("exhaustive grid search refused: {0}")]
    OracleScope(String),

    #[error("exact enumeration over {n} clients is too large; use the Monte-Carlo estimator")]
    UseMonteCarlo { n: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("selection skew undefined at round {round}: denominator {denominator:e}")]
    SkewUndefined { round: usize, denominator: f64 },

    #[error("model left the trust region at round {round}: |theta| = {norm} > {radius}")]
    TrustRegion { round: usize, norm: f64, radius: f64 },

    #[error(transparent)]
    Config(#[from] crate::experiment::ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
