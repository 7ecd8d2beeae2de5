//! Numerical laboratory for boundary blow-up ("large") solutions of
//!
//! ```text
//! div(d^α Φ_p(∇u)) = b(x) f(u)   in a ball or interval,   u → ∞ on the boundary,
//! ```
//!
//! where `d` is the distance to the boundary and `Φ_p(z) = |z|^{p−2} z`.
//!
//! The crate is organised bottom-up: [`quadrature`], [`ode`],
//! [`extrapolate`] and [`interp`] are numerical infrastructure; [`karamata`],
//! [`nonlinearity`] and [`transform`] model the ingredients of the rate
//! formulas; [`radial`] constructs solutions; [`asymptotics`] evaluates the
//! closed-form predictions and [`rate_fit`] measures computed profiles
//! against them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod extrapolate;
pub mod interp;
pub mod karamata;
pub mod nonlinearity;
pub mod ode;
pub mod quadrature;
pub mod radial;
pub mod rate_fit;
pub mod tolerances;
pub mod transform;

pub use asymptotics::{AsymptoticPrediction, Variant};
pub use error::{Error, Result};
pub use karamata::{KaramataLimits, KaramataSpec, KernelKind, SecondOrderClass, YKind};
pub use nonlinearity::{KoVerdict, NonlinearitySpec, SlowlyVarying};
pub use radial::{Coefficient, LeftCondition, RadialProblem, SolutionProfile, Weight};
pub use rate_fit::{RateFit, Status, Verdict};
pub use transform::PhiTransform;

/// Shared handle for caller-supplied scalar functions.
pub type ScalarFn = std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>;
