use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("measure not integrable at infinity")]
    TailDiverges,

    #[error("measure fails the min(1, x^2) integrability test near zero")]
    SmallJumpsDiverge,

    #[error("ratio undefined: zero tail mass at x = {0}")]
    ZeroTailMass(f64),

    #[error("no local times: integral of 1/psi diverges at infinity")]
    NoLocalTimes,

    #[error("quadrature did not converge: best estimate {best}, achieved error {achieved}, target {target}")]
    QuadratureNoConverge {
        best: f64,
        achieved: f64,
        target: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} outside achievable range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("covariance not PSD at tolerance: pivot {pivot} at site index {index}")]
    NotPsd { pivot: f64, index: usize },

    #[error("jump rate overflow: {expected:.3e} expected jumps exceeds budget {budget:.3e}")]
    RateOverflow { expected: f64, budget: f64 },

    #[error("config parse error: {0}")]
    Config(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("importance weights unstable: variance {0:.3e}")]
    UnstableWeights(f64),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
