use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("weight s^(-alpha/2) k(s) is not integrable at 0 (alpha = {alpha})")]
    NonIntegrableWeight { alpha: f64 },

    #[error("quadrature failed to converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("{what}: extrapolants {last} and {previous} disagree")]
    NonConvergent { what: &'static str, last: f64, previous: f64 },

    #[error("second-order ratio diverges; the scale function does not match this kernel")]
    WrongScale,

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("improper integral diverges (tail exponent {tail_exponent})")]
    DivergentIntegral { tail_exponent: f64 },

    #[error("t = {t} exceeds the total mass {limit} of the transform")]
    OutOfRange { t: f64, limit: f64 },

    #[error("step size underflow at r = {radius}")]
    StepUnderflow { radius: f64 },

    #[error("no bracket for {what}: target {target} unreachable")]
    Bracketing { what: &'static str, target: f64 },

    #[error("root search did not converge after {} iterations", trace.len())]
    NoConvergence { trace: Vec<(f64, f64)> },

    #[error("Dirichlet schedule exhausted before interior saturation (gap {gap:e})")]
    NotSaturated { gap: f64 },

    #[error("degenerate exponent: power_q = p - 1")]
    DegenerateExponent,

    #[error("power_q = {power_q} <= p - 1 = {pm1}: no blow-up branch")]
    NoBlowUp { power_q: f64, pm1: f64 },

    #[error("Karamata class {class} does not match the scale function")]
    WrongClass { class: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fit window holds {points} grid points, at least {required} required")]
    WindowTooSmall { points: usize, required: usize },

    #[error("b / (d^(alpha - alpha p/2) k^p) does not stabilise (log-slope {slope})")]
    DecompositionMismatch { slope: f64 },

    #[error("profile resolved only to d = {finest:e}, need {required:e}")]
    InsufficientResolution { finest: f64, required: f64 },

    #[error("first-order ratio {measured} inconsistent with xi0 = {expected}")]
    FirstOrderMismatch { measured: f64, expected: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
