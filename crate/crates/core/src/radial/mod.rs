//! Radial large solutions of
//!
//! ```text
//! (r^{N−1} w(r) Φ_p(ψ'))' = r^{N−1} b(r) f(ψ),   0 < r < R,
//! ```
//!
//! with `ψ'(0) = 0` (ball) or `ψ(0) = 0` (interval, `N = 1`).
//!
//! The solver carries the flux `J = r^{N−1} w Φ_p(ψ')` as a state variable,
//! so `Φ_p` is only ever inverted, never differentiated. The outer half of the
//! ball is integrated in `η = ln(R − r)` with state `(ln ψ, ln J)`, which keeps
//! the boundary layer well conditioned down to `R − r ≈ 1e−15 R`.

mod profile;
mod shoot;
mod solve;

pub use profile::{comparison_check, Comparison, ProfileMeta, SolutionProfile};
pub use shoot::Shot;
pub use solve::{default_schedule, CriticalBracket};

use crate::error::{invalid, Error, Result};
use crate::karamata::KaramataSpec;
use crate::nonlinearity::NonlinearitySpec;
use crate::ScalarFn;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Radial weight `w(r)`; the exponent is the problem's `α`.
#[derive(Clone)]
pub enum Weight {
    /// `w(r) = (R − r)^α`.
    DistancePower,
    /// `w(r) = r^α`.
    CenterPower,
    Custom { name: String, w: ScalarFn },
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Weight {
    pub fn label(&self) -> String {
        match self {
            Weight::DistancePower => "distance_power".into(),
            Weight::CenterPower => "center_power".into(),
            Weight::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    fn ln_w(&self, alpha: f64, r: f64, d: f64) -> f64 {
        match self {
            Weight::DistancePower => alpha * d.ln(),
            Weight::CenterPower => alpha * r.ln(),
            Weight::Custom { w, .. } => w(r).ln(),
        }
    }

    /// Exponent `a` in `w ~ d^a` at the boundary.
    fn boundary_exponent(&self, alpha: f64) -> f64 {
        match self {
            Weight::DistancePower => alpha,
            _ => 0.0,
        }
    }

    /// Exponent `a` in `w ~ r^a` at the centre.
    fn center_exponent(&self, alpha: f64) -> f64 {
        match self {
            Weight::CenterPower => alpha,
            _ => 0.0,
        }
    }
}

#[derive(Clone)]
pub enum CoefficientKind {
    Constant,
    /// `(R − r)^γ`.
    DistancePower { gamma: f64 },
    /// `d^{α − αp/2} k(d)^p (1 + B₀ d^θ)` built from a boundary weight.
    Karamata { kernel: KaramataSpec, p: f64, b0: f64, theta: f64 },
    /// A function of the distance `d = R − r`.
    Distance { name: String, b: ScalarFn },
    /// A function of `r`.
    Radial { name: String, b: ScalarFn },
}

/// The coefficient `b = factor · kind`.
#[derive(Clone)]
pub struct Coefficient {
    pub factor: f64,
    pub kind: CoefficientKind,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}", self.factor, self.label())
    }
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self { factor: c, kind: CoefficientKind::Constant }
    }

    pub fn distance_power(b: f64, gamma: f64) -> Self {
        Self { factor: b, kind: CoefficientKind::DistancePower { gamma } }
    }

    pub fn karamata(c: f64, kernel: KaramataSpec, p: f64, b0: f64, theta: f64) -> Self {
        Self { factor: c, kind: CoefficientKind::Karamata { kernel, p, b0, theta } }
    }

    pub fn distance(name: impl Into<String>, b: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { factor: 1.0, kind: CoefficientKind::Distance { name: name.into(), b: std::sync::Arc::new(b) } }
    }

    pub fn radial(name: impl Into<String>, b: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { factor: 1.0, kind: CoefficientKind::Radial { name: name.into(), b: std::sync::Arc::new(b) } }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { factor: self.factor * lambda, kind: self.kind.clone() }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            CoefficientKind::Constant => "constant".into(),
            CoefficientKind::DistancePower { gamma } => format!("d^{gamma}"),
            CoefficientKind::Karamata { kernel, b0, theta, .. } => {
                format!("karamata({:?},b0={b0},theta={theta})", kernel.kind)
            }
            CoefficientKind::Distance { name, .. } | CoefficientKind::Radial { name, .. } => name.clone(),
        }
    }

    /// `ln b` at radius `r`, distance `d = R − r` (both supplied so that
    /// neither is recomputed by cancellation).
    pub fn ln_value(&self, r: f64, d: f64) -> f64 {
        self.factor.ln()
            + match &self.kind {
                CoefficientKind::Constant => 0.0,
                CoefficientKind::DistancePower { gamma } => gamma * d.ln(),
                CoefficientKind::Karamata { kernel, p, b0, theta } => {
                    let a = kernel.alpha;
                    (a - 0.5 * a * p) * d.ln() + p * kernel.k(d).ln() + (b0 * d.powf(*theta)).ln_1p()
                }
                CoefficientKind::Distance { b, .. } => b(d).ln(),
                CoefficientKind::Radial { b, .. } => b(r).ln(),
            }
    }

    pub fn value(&self, r: f64, d: f64) -> f64 {
        self.ln_value(r, d).exp()
    }

    /// `(B(R), γ)` when `b = B (R − r)^γ` with constant `B`.
    pub fn boundary_form(&self) -> Option<(f64, f64)> {
        match &self.kind {
            CoefficientKind::Constant => Some((self.factor, 0.0)),
            CoefficientKind::DistancePower { gamma } => Some((self.factor, *gamma)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftCondition {
    /// `ψ'(0) = 0`; the shooting parameter is `ψ(0)`.
    Symmetric,
    /// `ψ(0) = 0` with `N = 1`; the shooting parameter is `ψ'(0)`.
    Anchored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Ratio between successive node distances to the boundary.
    pub grading: f64,
    /// Smallest node distance, relative to `R`.
    pub finest: f64,
    /// Integration continues to this distance (relative to `R`) past the grid.
    pub floor: f64,
    /// Series start radius for the symmetric case, relative to `R`.
    pub start: f64,
    /// `ψ` above this counts as blown up.
    pub blow_up_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: crate::tolerances::ODE_RTOL,
            atol: crate::tolerances::ODE_ATOL,
            grading: 0.9,
            finest: 1e-8,
            floor: 1e-15,
            start: 1e-8,
            blow_up_threshold: 1e100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub dimension: usize,
    pub radius: f64,
    pub p: f64,
    pub alpha: f64,
    pub weight: Weight,
    pub coefficient: Coefficient,
    pub nonlinearity: NonlinearitySpec,
    pub left: LeftCondition,
    pub options: SolverOptions,
}

impl RadialProblem {
    /// Ball problem with `w = (R − r)^α` and `b ≡ 1`.
    pub fn new(dimension: usize, radius: f64, p: f64, alpha: f64, nonlinearity: NonlinearitySpec) -> Result<Self> {
        let pr = Self {
            dimension,
            radius,
            p,
            alpha,
            weight: Weight::DistancePower,
            coefficient: Coefficient::constant(1.0),
            nonlinearity,
            left: LeftCondition::Symmetric,
            options: SolverOptions::default(),
        };
        pr.validate()?;
        Ok(pr)
    }

    /// The interval problem on `(0, R)` with `u(0) = 0`.
    pub fn interval(radius: f64, p: f64, alpha: f64, nonlinearity: NonlinearitySpec) -> Result<Self> {
        let mut pr = Self::new(1, radius, p, alpha, nonlinearity)?;
        pr.left = LeftCondition::Anchored;
        Ok(pr)
    }

    pub fn with_weight(mut self, weight: Weight) -> Result<Self> {
        self.weight = weight;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coefficient(mut self, coefficient: Coefficient) -> Self {
        self.coefficient = coefficient;
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self { radius, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if !(self.radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        if !(self.p > 1.0) {
            return Err(invalid("p", "must exceed 1"));
        }
        if !(self.alpha > -1.0 && self.alpha < self.p - 1.0) {
            return Err(invalid("alpha", "must lie in (-1, p-1)"));
        }
        if self.left == LeftCondition::Anchored {
            if self.dimension != 1 {
                return Err(invalid("left", "u(0)=0 is only meaningful for N = 1"));
            }
            if matches!(self.weight, Weight::CenterPower) {
                return Err(invalid("weight", "center weight vanishes at the anchored end"));
            }
        }
        let o = &self.options;
        if !(o.grading > 0.0 && o.grading < 1.0) || !(o.finest > o.floor && o.floor > 0.0) {
            return Err(invalid("options", "need 0 < grading < 1 and 0 < floor < finest"));
        }
        Ok(())
    }

    /// Blow-up at the boundary requires the Keller–Osserman integral to
    /// converge.
    pub fn check_blow_up(&self) -> Result<()> {
        let ko = self.nonlinearity.keller_osserman(self.p)?;
        if ko.convergent {
            Ok(())
        } else {
            Err(Error::NoBlowUp { power_q: self.nonlinearity.sigma + 1.0, pm1: self.p - 1.0 })
        }
    }

    /// Node distances `R g^j`, from `R` down to about `finest · R`.
    pub fn grid_distances(&self) -> Vec<f64> {
        let g = self.options.grading;
        let n = (self.options.finest.ln() / g.ln() + 1e-9).floor() as i32;
        (0..=n).map(|j| self.radius * g.powi(j)).collect()
    }

    /// Index of the first node with `d ≤ R/2`, where the log-distance phase
    /// takes over.
    fn switch_index(&self) -> usize {
        self.grid_distances().iter().position(|&d| d <= 0.5 * self.radius).unwrap_or(0)
    }
}
