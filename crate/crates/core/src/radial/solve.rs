use super::profile::SolutionProfile;
use super::shoot::Fate;
use super::{CoefficientKind, RadialProblem, Weight};
use crate::error::{invalid, Error, Result};
use crate::extrapolate::aitken_limit;
use crate::quadrature::{gk15, tanh_sinh};
use crate::tolerances::{DIRICHLET_RESIDUAL, ORDER_SLACK, QUAD_REL, SATURATION};
use serde::{Deserialize, Serialize};

/// Adjacent shooting parameters on either side of the large solution:
/// `lo` reaches the boundary with finite data, `hi` blows up before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalBracket {
    pub lo: f64,
    pub hi: f64,
    pub shots: usize,
}

/// `2⁰, 2¹, …, 2¹⁶`.
pub fn default_schedule() -> Vec<f64> {
    (0..=16).map(|j| 2f64.powi(j)).collect()
}

impl RadialProblem {
    fn blows_up(&self, x: f64) -> Result<bool> {
        Ok(matches!(self.integrate(x, false)?.fate, Fate::BlowUp(_)))
    }

    /// Brackets the shooting parameter of the large solution down to
    /// neighbouring floating-point numbers.
    pub fn critical_bracket(&self) -> Result<CriticalBracket> {
        self.check_blow_up()?;
        let mut shots = 0;
        let mut probe = |x: f64| {
            shots += 1;
            self.blows_up(x)
        };
        let (mut lo, mut hi) = (1.0, 1.0);
        if probe(1.0)? {
            while probe(lo)? {
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(Error::Bracketing { what: "critical parameter", target: 0.0 });
                }
            }
            hi = lo * 2.0;
        } else {
            while !probe(hi)? {
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::Bracketing { what: "critical parameter", target: f64::INFINITY });
                }
            }
            lo = hi * 0.5;
        }
        loop {
            let mid = if hi > 2.0 * lo { (lo * hi).sqrt() } else { lo + 0.5 * (hi - lo) };
            if mid <= lo || mid >= hi {
                break;
            }
            if probe(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(CriticalBracket { lo, hi, shots })
    }

    /// Profile of the large solution shot from the finite side of the
    /// critical bracket.
    pub fn critical_profile(&self, bracket: &CriticalBracket) -> Result<SolutionProfile> {
        let run = self.integrate(bracket.lo, true)?;
        let mut profile = self.run_to_profile(bracket.lo, run);
        profile.meta.blow_up = true;
        profile.meta.boundary_value = None;
        Ok(profile)
    }

    /// Dirichlet problem `ψ(R) = k`.
    pub fn solve_dirichlet(&self, k: f64) -> Result<SolutionProfile> {
        let bracket = match self.check_blow_up() {
            Ok(()) => Some(self.critical_bracket()?),
            Err(_) => None,
        };
        self.solve_dirichlet_within(k, bracket.as_ref())
    }

    pub(crate) fn solve_dirichlet_within(&self, k: f64, bracket: Option<&CriticalBracket>) -> Result<SolutionProfile> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(invalid("k", "must be finite and nonnegative"));
        }
        let boundary = |x: f64| -> Result<f64> {
            Ok(match self.integrate(x, false)?.fate {
                Fate::Finite(v) => v,
                Fate::BlowUp(_) => f64::INFINITY,
            })
        };
        let finish = |x: f64, residual: f64| -> Result<SolutionProfile> {
            let run = self.integrate(x, true)?;
            let mut profile = self.run_to_profile(x, run);
            profile.meta.dirichlet_target = Some(k);
            if residual > DIRICHLET_RESIDUAL {
                profile.meta.residual = Some(profile.meta.residual.unwrap_or(0.0).max(residual));
            }
            Ok(profile)
        };
        if k == 0.0 && self.nonlinearity.f(0.0) == 0.0 {
            return finish(0.0, 0.0);
        }
        let g = |x: f64| -> Result<f64> { Ok(boundary(x)?.ln() - k.ln()) };

        let mut lo = 0.0;
        let mut g_lo = f64::NEG_INFINITY;
        let mut hi = match bracket {
            Some(b) => b.lo,
            None => k.max(1.0),
        };
        let mut g_hi = g(hi)?;
        while g_hi < 0.0 {
            if bracket.is_some() {
                return Err(Error::Bracketing { what: "dirichlet data", target: k });
            }
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            g_hi = g(hi)?;
            if hi > 1e300 {
                return Err(Error::Bracketing { what: "dirichlet data", target: k });
            }
        }
        let mut trace = Vec::new();
        let mut side = 0i8;
        for _ in 0..400 {
            let finite = g_lo.is_finite() && g_hi.is_finite();
            let mut x = if finite { (lo * g_hi - hi * g_lo) / (g_hi - g_lo) } else { 0.5 * (lo + hi) };
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            if x <= lo || x >= hi {
                let (best, res) = if g_lo.abs() < g_hi.abs() { (lo, g_lo.abs()) } else { (hi, g_hi.abs()) };
                return finish(best, res);
            }
            let gx = g(x)?;
            trace.push((x, gx));
            if gx.abs() <= DIRICHLET_RESIDUAL {
                return finish(x, gx.abs());
            }
            if gx < 0.0 {
                lo = x;
                g_lo = gx;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                g_hi = gx;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
        }
        Err(Error::NoConvergence { trace })
    }

    /// Solves along the Dirichlet schedule, checks monotonicity, extrapolates
    /// interior values and returns the large-solution profile.
    pub fn large_solution(&self, schedule: &[f64]) -> Result<SolutionProfile> {
        let (profile, _) = self.large_solution_with_members(schedule)?;
        Ok(profile)
    }

    /// As [`Self::large_solution`], also returning the schedule members.
    pub fn large_solution_with_members(&self, schedule: &[f64]) -> Result<(SolutionProfile, Vec<SolutionProfile>)> {
        if schedule.len() < 4 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("k_schedule", "need at least four strictly increasing values"));
        }
        let bracket = self.critical_bracket()?;
        let members = schedule
            .iter()
            .map(|&k| self.solve_dirichlet_within(k, Some(&bracket)))
            .collect::<Result<Vec<_>>>()?;
        let mut violation: f64 = 0.0;
        for w in members.windows(2) {
            for i in 0..w[0].len() {
                violation = violation.max((w[0].u[i] - w[1].u[i]) / w[1].u[i].abs().max(1.0));
            }
        }
        let mut profile = self.critical_profile(&bracket)?;
        let mut gap: f64 = 0.0;
        let mut mismatch: f64 = 0.0;
        for i in profile.interior() {
            let seq: Vec<f64> = members.iter().map(|m| m.u[i]).collect();
            let lim = aitken_limit(&seq, 4);
            let scale = lim.value.abs().max(f64::MIN_POSITIVE);
            gap = gap.max(lim.gap() / scale);
            mismatch = mismatch.max((lim.value - profile.u[i]).abs() / scale);
        }
        profile.meta.saturation_gap = Some(gap);
        profile.meta.limit_mismatch = Some(mismatch);
        profile.meta.monotonicity_violation = Some(violation.max(0.0));
        if violation > ORDER_SLACK {
            return Err(invalid("k_schedule", "Dirichlet solutions are not monotone in k"));
        }
        if gap > SATURATION {
            return Err(Error::NotSaturated { gap });
        }
        Ok((profile, members))
    }

    /// Keller–Osserman envelope: the smallest centre value whose solution
    /// blows up exactly at radius `s`.
    pub fn ko_envelope(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Bracketing { what: "envelope radius", target: s });
        }
        Ok(self.with_radius(s).critical_bracket()?.hi)
    }

    /// `I(ψ₀) = ∫_{ψ₀}^∞ (q c (F(z) − F(ψ₀)))^{−1/p} dz` for constant weight
    /// and coefficient `c`.
    pub fn sandwich_integral(&self, psi0: f64) -> Result<f64> {
        let constant_weight = match self.weight {
            Weight::DistancePower | Weight::CenterPower => self.alpha == 0.0,
            Weight::Custom { .. } => false,
        };
        if !constant_weight || !matches!(self.coefficient.kind, CoefficientKind::Constant) {
            return Err(Error::Unsupported("sandwich bound needs constant weight and coefficient".into()));
        }
        if !(psi0 > 0.0) {
            return Err(invalid("psi0", "must be positive"));
        }
        let p = self.p;
        let q = p / (p - 1.0);
        let c = self.coefficient.factor;
        let nl = &self.nonlinearity;
        // Near ψ₀ the primitive difference is integrated directly to avoid
        // cancellation.
        let near = tanh_sinh(
            |x| {
                let mut g = |y: f64| nl.f(psi0 + y);
                let (diff, _) = gk15(&mut g, 0.0, x);
                (q * c * diff).powf(-1.0 / p)
            },
            0.0,
            psi0,
            QUAD_REL,
        )?;
        let f0 = nl.big_f(psi0)?;
        let rho = (nl.sigma + 2.0) / p;
        let m = 1.0 / (rho - 1.0);
        let far = tanh_sinh(
            |tau| {
                // Log space: F(z) overflows long before the integrand decays.
                let ln_tau = tau.ln();
                let z = 2.0 * psi0 * (-m * ln_tau).exp();
                let ln_fz = nl.ln_big_f(z).unwrap_or(f64::NAN);
                let ln_diff = ln_fz + (-(f0.ln() - ln_fz).exp()).ln_1p();
                (-(q * c).ln() / p - ln_diff / p + (2.0 * psi0 * m).ln() - (m + 1.0) * ln_tau).exp()
            },
            0.0,
            1.0,
            QUAD_REL,
        )?;
        Ok(near.value + far.value)
    }
}
