//! The profile generator `φ`, defined by `∫_{φ(t)}^∞ (qF(s))^{−1/p} ds = t`
//! with `q = p/(p−1)`.
//!
//! `φ⁻¹` is a tail integral from [`NonlinearitySpec::ko_tail`]; `φ` is
//! obtained by safeguarded Newton iteration on `ln φ⁻¹(e^x) = ln t`, using
//! the exact derivative `(φ⁻¹)'(u) = −(qF(u))^{−1/p}`.

use crate::error::{Error, Result};
use crate::extrapolate::richardson;
use crate::interp::Pchip;
use crate::karamata::limit_grid;
use crate::nonlinearity::NonlinearitySpec;
use crate::tolerances::{LIMIT_AGREEMENT, PHI_DIFF_STEP_1, PHI_DIFF_STEP_2, PHI_REL};
use serde::{Deserialize, Serialize};

const CACHE_NODES: usize = 400;
const CACHE_T_MIN: f64 = 1e-8;
const CACHE_T_MAX: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct PhiTransform {
    pub nonlinearity: NonlinearitySpec,
    pub p: f64,
    /// Conjugate exponent `p/(p−1)`.
    pub q: f64,
    cache: Pchip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub value: f64,
    pub target: f64,
}

impl LimitCheck {
    pub fn error(&self) -> f64 {
        (self.value - self.target).abs()
    }
}

impl PhiTransform {
    pub fn new(nonlinearity: NonlinearitySpec, p: f64) -> Result<Self> {
        let rho = (nonlinearity.sigma + 2.0) / p;
        if !(p > 1.0) || rho <= 1.0 {
            return Err(Error::DivergentIntegral { tail_exponent: rho });
        }
        let q = p / (p - 1.0);
        let mut lt = Vec::with_capacity(CACHE_NODES);
        let mut lphi = Vec::with_capacity(CACHE_NODES);
        let (a, b) = (CACHE_T_MIN.ln(), CACHE_T_MAX.ln());
        let mut guess = None;
        let mut this = Self { nonlinearity, p, q, cache: Pchip::new(vec![0.0, 1.0], vec![0.0, 0.0]) };
        for i in 0..CACHE_NODES {
            let x = a + (b - a) * i as f64 / (CACHE_NODES - 1) as f64;
            let u = this.invert(x.exp(), guess)?;
            guess = Some(u.ln());
            lt.push(x);
            lphi.push(u.ln());
        }
        this.cache = Pchip::new(lt, lphi);
        Ok(this)
    }

    /// `e = σ + 2 − p`.
    pub fn excess(&self) -> f64 {
        self.nonlinearity.sigma + 2.0 - self.p
    }

    pub fn phi_inverse(&self, u: f64) -> Result<f64> {
        self.nonlinearity.ko_tail(u, self.p)
    }

    /// `(qF(u))^{1/p}`, i.e. `−φ'` at the point where `φ = u`.
    pub fn flux(&self, u: f64) -> Result<f64> {
        Ok(((self.q.ln() + self.nonlinearity.ln_big_f(u)?) / self.p).exp())
    }

    fn invert(&self, t: f64, guess_ln_u: Option<f64>) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain { what: "t", value: t });
        }
        let target = t.ln();
        let e = self.excess();
        let slope_guess = -e / self.p;
        let mut x = guess_ln_u.unwrap_or_else(|| -target / (-slope_guess));
        // Bracket on x = ln u: g(x) = ln φ⁻¹(e^x) − ln t decreases in x.
        let g = |x: f64| -> Result<(f64, f64)> {
            let u = x.exp();
            let inv = self.phi_inverse(u)?;
            let dlog = -u / (self.flux(u)? * inv);
            Ok((inv.ln() - target, dlog))
        };
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..200 {
            if x < -700.0 {
                return Err(Error::OutOfRange { t, limit: self.phi_inverse(1e-300)? });
            }
            let (gv, dg) = g(x)?;
            if gv > 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let mut step = -gv / dg;
            if !step.is_finite() {
                step = if gv > 0.0 { 1.0 } else { -1.0 };
            }
            step = step.clamp(-4.0, 4.0);
            let mut next = x + step;
            if (next <= lo || next >= hi) && lo.is_finite() && hi.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= PHI_REL * x.abs().max(1.0) {
                return Ok(next.exp());
            }
            x = next;
        }
        Err(Error::NonConvergent { what: "phi inversion", last: x, previous: f64::NAN })
    }

    /// `φ(t)` to relative accuracy ~1e−13, started from the cache.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.invert(t, Some(self.cache.eval(t.ln())))
    }

    /// Interpolated `φ` from the cache (monotone cubic in log–log).
    pub fn phi_cached(&self, t: f64) -> f64 {
        self.cache.eval(t.ln()).exp()
    }

    /// Cache nodes as `(t, φ(t))`.
    pub fn cache_table(&self) -> Vec<(f64, f64)> {
        self.cache.xs().iter().zip(self.cache.ys()).map(|(x, y)| (x.exp(), y.exp())).collect()
    }

    /// `φ'(t)` from the defining identity `φ' = −(qF(φ))^{1/p}`.
    pub fn phi_prime(&self, t: f64) -> Result<f64> {
        Ok(-self.flux(self.phi(t)?)?)
    }

    /// `φ''(t)` from `|φ'|^{p−2} φ'' = (q/p) f(φ)`.
    pub fn phi_second(&self, t: f64) -> Result<f64> {
        let u = self.phi(t)?;
        let fl = self.flux(u)?;
        Ok(self.q / self.p * self.nonlinearity.f(u) / fl.powf(self.p - 2.0))
    }

    /// Residuals of the two derivative identities with `φ'`, `φ''` taken by
    /// central differences of `φ` itself.
    pub fn identity_residuals(&self, t: f64) -> Result<Residuals> {
        let h1 = t * PHI_DIFF_STEP_1;
        let d1 = (self.phi(t + h1)? - self.phi(t - h1)?) / (2.0 * h1);
        let h2 = t * PHI_DIFF_STEP_2;
        let f0 = self.phi(t)?;
        let (fm2, fm1) = (self.phi(t - 2.0 * h2)?, self.phi(t - h2)?);
        let (fp1, fp2) = (self.phi(t + h2)?, self.phi(t + 2.0 * h2)?);
        let d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h2 * h2);
        let flux = self.flux(f0)?;
        let r1 = (d1 + flux).abs() / d1.abs();
        let target = self.q / self.p * self.nonlinearity.f(f0);
        let r2 = (d1.abs().powf(self.p - 2.0) * d2 - target).abs() / target;
        Ok(Residuals { r1, r2 })
    }

    fn limit_at_zero<F: Fn(f64) -> Result<f64>>(&self, what: &'static str, g: F) -> Result<f64> {
        let ts = limit_grid();
        let vs = ts.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
        let lim = richardson(&ts, &vs, 2);
        if lim.converged(LIMIT_AGREEMENT) {
            return Ok(lim.value);
        }
        let s: Vec<f64> = ts.iter().map(|t| -1.0 / t.ln()).collect();
        let lim = richardson(&s, &vs, 2);
        if lim.converged(LIMIT_AGREEMENT) {
            Ok(lim.value)
        } else {
            Err(Error::NonConvergent { what, last: lim.value, previous: lim.previous })
        }
    }

    /// `lim t φ'(t)/φ(t)` at `0⁺` against `−p/(σ+2−p)`.
    pub fn phi_nrvz_index(&self) -> Result<LimitCheck> {
        let value = self.limit_at_zero("phi index", |t| {
            let u = self.phi(t)?;
            Ok(-t * self.flux(u)? / u)
        })?;
        Ok(LimitCheck { value, target: -self.p / self.excess() })
    }

    /// `lim Φ_p(φ'(t)) / (t f(φ(t)))` against `−(q/p)(σ+2−p)/(σ+2)`.
    pub fn flux_limit(&self) -> Result<LimitCheck> {
        let value = self.limit_at_zero("flux limit", |t| {
            let u = self.phi(t)?;
            Ok(-self.flux(u)?.powf(self.p - 1.0) / (t * self.nonlinearity.f(u)))
        })?;
        let s = self.nonlinearity.sigma;
        Ok(LimitCheck { value, target: -(self.q / self.p) * self.excess() / (s + 2.0) })
    }

    /// For `p = 2`: `φ'/(tφ'')` and `φ/(t²φ'')` at `0⁺` against
    /// `−σ/(σ+2)` and `σ²/(2(σ+2))`.
    pub fn curvature_limits(&self) -> Result<(LimitCheck, LimitCheck)> {
        let s = self.nonlinearity.sigma;
        let a = self.limit_at_zero("phi'/(t phi'')", |t| Ok(self.phi_prime(t)? / (t * self.phi_second(t)?)))?;
        let b = self.limit_at_zero("phi/(t^2 phi'')", |t| Ok(self.phi(t)? / (t * t * self.phi_second(t)?)))?;
        Ok((
            LimitCheck { value: a, target: -s / (s + 2.0) },
            LimitCheck { value: b, target: s * s / (2.0 * (s + 2.0)) },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_closed_form() {
        let tr = PhiTransform::new(NonlinearitySpec::power(3.0), 2.0).unwrap();
        let s2 = 2f64.sqrt();
        assert!((tr.phi_inverse(s2).unwrap() - 1.0).abs() < 1e-13);
        assert!((tr.phi(1.0).unwrap() - s2).abs() < 1e-12);
        assert!((tr.phi(0.1).unwrap() / (10.0 * s2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_ko_is_rejected() {
        assert!(PhiTransform::new(NonlinearitySpec::power(1.0), 2.0).is_err());
    }
}
