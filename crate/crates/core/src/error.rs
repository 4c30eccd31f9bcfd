use thiserror::Error;

/// Errors produced by the hitting-time computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SirError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration stalled at t = {t} (step size underflow)")]
    IntegrationStall { t: f64 },

    #[error("no crossing before the a-priori time cap {cap}")]
    TimeCapExceeded { cap: f64 },

    #[error("threshold is never reached (infinite hitting time)")]
    NeverReached,

    #[error("quadrature did not converge: estimate {estimate}, error bound {error}")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },

    #[error("finite-difference stencil around ({x}, {y}) leaves the smooth domain")]
    StencilOutOfDomain { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, SirError>;
