//! Numerical tolerances shared across modules.
//!
//! Each constant is the single source of truth for its check; tests and the
//! acceptance suite import these instead of repeating literals.

/// Relative tolerance requested from tanh-sinh for primitives and kernels.
pub const QUAD_REL: f64 = 1e-13;

/// Relative accuracy target for `φ` by Newton inversion of `φ⁻¹`.
pub const PHI_REL: f64 = 1e-13;

/// Two successive extrapolants of a limit must agree to this relative level.
pub const LIMIT_AGREEMENT: f64 = 1e-4;

/// |l₁| below this is classified as class K₀.
pub const L1_ZERO: f64 = 1e-6;

/// Step for central differences of `k` when no analytic derivative exists,
/// relative to `t`.
pub const KERNEL_DIFF_STEP: f64 = 1e-6;

/// Relative step for first derivatives of `φ` in residual checks.
pub const PHI_DIFF_STEP_1: f64 = 1e-5;

/// Relative step for the five-point second derivative of `φ`. Rounding in
/// `φ` (≈1e−15) divided by h² rules out 1e−5 here.
pub const PHI_DIFF_STEP_2: f64 = 2e-3;

/// ODE relative / absolute tolerances for the shooting integrator.
pub const ODE_RTOL: f64 = 1e-12;
pub const ODE_ATOL: f64 = 1e-14;

/// Ordering slack for comparison checks.
pub const ORDER_SLACK: f64 = 1e-8;

/// Interior saturation criterion for the Dirichlet schedule.
pub const SATURATION: f64 = 1e-8;

/// Dirichlet boundary-value residual target.
pub const DIRICHLET_RESIDUAL: f64 = 1e-10;

/// Default verdict tolerances: exponents, first-order constants,
/// second-order coefficients.
pub const FIT_EXPONENT: f64 = 0.02;
pub const FIT_CONSTANT: f64 = 0.05;
pub const FIT_SECOND_ORDER: f64 = 0.15;

/// Absolute agreement of estimated Karamata limits with closed forms.
pub const KARAMATA_LIMIT: f64 = 1e-6;

/// Minimum number of grid points inside a fit window.
pub const FIT_MIN_POINTS: usize = 8;

/// Largest log-log slope of `b / (d^{α−αp/2} k^p)` accepted as "stabilised".
pub const DECOMPOSITION_SLOPE: f64 = 0.05;

/// Relative accuracy floor of computed profiles, added to extrapolation
/// error estimates.
pub const FIT_STDERR_FLOOR: f64 = 1e-9;

/// Second-order fits need profiles resolved at least this close to the
/// boundary.
pub const SECOND_ORDER_RESOLUTION: f64 = 1e-6;
