use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trace {0} is below the cone apex cutoff")]
    ApexState(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("jump operator has zero coordinates")]
    ZeroJump,

    #[error("Choi sign must be +1 or -1, got {0}")]
    InvalidSign(i64),

    #[error("linear channel (g = 0) with nonzero trace observable (|Omega| = {0:e}) is not trace preserving")]
    NotTracePreserving(f64),

    #[error("channel is not pseudo-linear: sigma components of Omega have norm {0:e}")]
    NotPseudoLinear(f64),

    #[error("operation requires g = {expected}, got g = {got}")]
    WrongNonlinearity { expected: f64, got: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state left the PSD cone at t = {t}: |r|/tau = {ratio}")]
    ConeViolation { t: f64, ratio: f64 },

    #[error("trace fell below the apex cutoff at t = {t}: tau = {tau:e}")]
    ApexReached { t: f64, tau: f64 },

    #[error("step control failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("slowdown fit undefined: speed vanishes along the approach direction")]
    NoMotion,

    #[error("target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
