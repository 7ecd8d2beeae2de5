//! Regularly varying absorption terms `f(u) = u^{σ+1} L(u)`.
//!
//! All large-argument quantities are computed in normalised form so that
//! nothing overflows: with `G(z) = F(z)/(z f(z)) = ∫₀¹ v^{σ+1} L(vz)/L(z) dv`
//! the primitive is `F(z) = z f(z) G(z)`, and improper tails
//! `∫_z^∞ F^{−1/p}` are reduced to integrals over `[0, 1]` whose integrand
//! stays bounded.

use crate::error::{invalid, Error, Result};
use crate::extrapolate::aitken_limit;
use crate::quadrature::{gauss_kronrod, tanh_sinh};
use crate::tolerances::{LIMIT_AGREEMENT, QUAD_REL};
use crate::ScalarFn;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

/// Slowly varying factor `L`.
#[derive(Clone)]
pub enum SlowlyVarying {
    One,
    /// `ln(1 + u)`
    Log1p,
    /// `ln ln(e + u)`
    LogLog,
    /// `exp((ln(e + u))^a)` with `0 < a < 1`
    ExpLog(f64),
    /// Caller-supplied `L`; its index is taken by log-space differences.
    Custom { name: String, l: ScalarFn },
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl SlowlyVarying {
    /// Parses the config spelling: `one`, `log1p`, `loglog`, `explog:a`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "one" => Ok(Self::One),
            "log1p" => Ok(Self::Log1p),
            "loglog" => Ok(Self::LogLog),
            other => {
                let a = other
                    .strip_prefix("explog:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| invalid("slowly_varying", format!("unknown factor `{other}`")))?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(invalid("slowly_varying", "explog exponent must lie in (0, 1)"));
                }
                Ok(Self::ExpLog(a))
            }
        }
    }

    pub fn custom(name: impl Into<String>, l: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.into(), l: Arc::new(l) }
    }

    pub fn label(&self) -> String {
        match self {
            Self::One => "one".into(),
            Self::Log1p => "log1p".into(),
            Self::LogLog => "loglog".into(),
            Self::ExpLog(a) => format!("explog:{a}"),
            Self::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::One)
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Log1p => u.ln_1p(),
            Self::LogLog => (E + u).ln().ln(),
            Self::ExpLog(a) => (E + u).ln().powf(*a).exp(),
            Self::Custom { l, .. } => l(u),
        }
    }

    /// `ln L(u)`.
    pub fn ln_value(&self, u: f64) -> f64 {
        match self {
            Self::One => 0.0,
            Self::ExpLog(a) => (E + u).ln().powf(*a),
            _ => self.value(u).ln(),
        }
    }

    /// `u L'(u) / L(u)`.
    pub fn index(&self, u: f64) -> f64 {
        match self {
            Self::One => 0.0,
            Self::Log1p => {
                if u == 0.0 {
                    1.0
                } else {
                    u / ((1.0 + u) * u.ln_1p())
                }
            }
            Self::LogLog => {
                let l1 = (E + u).ln();
                let l2 = l1.ln();
                if l2 == 0.0 {
                    1.0
                } else {
                    u / ((E + u) * l1 * l2)
                }
            }
            Self::ExpLog(a) => {
                let l1 = (E + u).ln();
                a * l1.powf(a - 1.0) * u / (E + u)
            }
            Self::Custom { .. } => {
                let h = 1e-4;
                let x = u.ln();
                (self.ln_value((x + h).exp()) - self.ln_value((x - h).exp())) / (2.0 * h)
            }
        }
    }
}

/// `f(u) = u^{σ+1} L(u)`.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub sigma: f64,
    pub slowly_varying: SlowlyVarying,
}

/// Keller–Osserman verdict for `∫₁^∞ (qF)^{−1/p}`, `q = p/(p−1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoVerdict {
    pub convergent: bool,
    /// `None` stands for `+∞`.
    pub integral_value: Option<f64>,
    pub p: f64,
    /// Power-law decay exponent `(σ+2)/p` of the integrand.
    pub tail_exponent: f64,
    /// The partial-sum check on `[1, 2²⁷]` agrees with the verdict.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioLimits {
    pub lim_f_over_zf: f64,
    pub target_f_over_zf: f64,
    pub lim_keller_ratio: f64,
    pub target_keller_ratio: f64,
}

/// Sample points `x_j = 4·2^j` for limits at `u = e^{x} → ∞`.
fn log_grid() -> impl Iterator<Item = f64> {
    (0..8).map(|j| 4.0 * 2f64.powi(j))
}

impl NonlinearitySpec {
    pub fn new(sigma: f64, slowly_varying: SlowlyVarying) -> Self {
        Self { sigma, slowly_varying }
    }

    /// Pure power `f(u) = u^{power_q}`.
    pub fn power(power_q: f64) -> Self {
        Self::new(power_q - 1.0, SlowlyVarying::One)
    }

    pub fn is_pure_power(&self) -> bool {
        self.slowly_varying.is_constant()
    }

    pub fn f(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        u.powf(self.sigma + 1.0) * self.slowly_varying.value(u)
    }

    pub fn ln_f(&self, u: f64) -> f64 {
        (self.sigma + 1.0) * u.ln() + self.slowly_varying.ln_value(u)
    }

    /// `u f'(u) / f(u)`.
    pub fn index(&self, u: f64) -> f64 {
        self.sigma + 1.0 + self.slowly_varying.index(u)
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.f(u) / u * self.index(u)
    }

    /// `f(t u) / f(u)`.
    pub fn f_ratio(&self, u: f64, t: f64) -> f64 {
        let l = &self.slowly_varying;
        t.powf(self.sigma + 1.0) * (l.ln_value(t * u) - l.ln_value(u)).exp()
    }

    /// `F(t) = ∫₀^t f` by direct tanh-sinh quadrature of `f`.
    pub fn big_f(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain { what: "t", value: t });
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(tanh_sinh(|s| self.f(s), 0.0, t, QUAD_REL)?.value)
    }

    /// `G(z) = F(z) / (z f(z))`.
    pub fn normalized_primitive(&self, z: f64) -> Result<f64> {
        if self.slowly_varying.is_constant() {
            // L(vz)/L(z) ≡ 1, so the integrand is v^{σ+1}.
            return Ok(1.0 / (self.sigma + 2.0));
        }
        let l = &self.slowly_varying;
        let lz = l.ln_value(z);
        let s1 = self.sigma + 1.0;
        Ok(tanh_sinh(|v| v.powf(s1) * (l.ln_value(v * z) - lz).exp(), 0.0, 1.0, QUAD_REL)?.value)
    }

    /// `ln F(z)`, computed without forming `F`.
    pub fn ln_big_f(&self, z: f64) -> Result<f64> {
        Ok(z.ln() + self.ln_f(z) + self.normalized_primitive(z)?.ln())
    }

    /// `F(z t) / F(z)`.
    pub fn primitive_ratio(&self, z: f64, t: f64) -> Result<f64> {
        let l = &self.slowly_varying;
        let g = self.normalized_primitive(z * t)? / self.normalized_primitive(z)?;
        Ok(t.powf(self.sigma + 2.0) * (l.ln_value(z * t) - l.ln_value(z)).exp() * g)
    }

    fn tail_exponent(&self, p: f64) -> f64 {
        (self.sigma + 2.0) / p
    }

    /// `∫₁^∞ (F(zt)/F(z))^{−1/p} dt` through `t = τ^{−m}`, `m = 1/(ρ−1)`,
    /// `ρ = (σ+2)/p`. The power part of the integrand cancels against the
    /// Jacobian exactly, leaving `m·[(L(zt)/L(z))·(G(zt)/G(z))]^{−1/p}`.
    pub fn normalized_tail(&self, z: f64, p: f64) -> Result<f64> {
        let rho = self.tail_exponent(p);
        if rho <= 1.0 {
            return Err(Error::DivergentIntegral { tail_exponent: rho });
        }
        let m = 1.0 / (rho - 1.0);
        if self.slowly_varying.is_constant() {
            return Ok(tanh_sinh(|_| m, 0.0, 1.0, QUAD_REL)?.value);
        }
        let l = &self.slowly_varying;
        let lz = l.ln_value(z);
        let gz = self.normalized_primitive(z)?;
        let mut failure = None;
        let value = tanh_sinh(
            |tau| {
                let ln_t = -m * tau.ln();
                if z.ln() + ln_t > 690.0 {
                    return 0.0;
                }
                let zt = z * ln_t.exp();
                match self.normalized_primitive(zt) {
                    Ok(g) => m * ((l.ln_value(zt) - lz).exp() * g / gz).powf(-1.0 / p),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            QUAD_REL,
        )?
        .value;
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    /// `∫_u^∞ (q F(s))^{−1/p} ds` with `q = p/(p−1)`.
    pub fn ko_tail(&self, u: f64, p: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain { what: "u", value: u });
        }
        let q = p / (p - 1.0);
        let ln_f = self.ln_big_f(u)?;
        let tail = self.normalized_tail(u, p)?;
        Ok(u * (-(q.ln() + ln_f) / p).exp() * tail)
    }

    /// Keller–Osserman test for `∫₁^∞ (qF)^{−1/p} dt`.
    ///
    /// The verdict follows from the tail exponent `(σ+2)/p`; the slowly
    /// varying factor cannot move it except in the critical case
    /// `σ + 2 = p`. There a pure power diverges logarithmically, while any
    /// other `L` is reported as inconclusive. The verdict is then
    /// checked against partial integrals over `[1, 2^j]`, `j ≤ 27`.
    pub fn keller_osserman(&self, p: f64) -> Result<KoVerdict> {
        if !(p > 1.0) {
            return Err(invalid("p", "must exceed 1"));
        }
        let rho = self.tail_exponent(p);
        let critical = (self.sigma + 2.0 - p).abs() <= 1e-12 * p;
        if critical && !self.slowly_varying.is_constant() {
            // A slowly varying factor decides the critical case either way.
            return Err(Error::Inconclusive(format!(
                "critical case sigma + 2 = p (sigma = {}, p = {p})",
                self.sigma
            )));
        }
        let convergent = rho > 1.0;
        let integral_value = if convergent { Some(self.ko_tail(1.0, p)?) } else { None };

        let q = p / (p - 1.0);
        let integrand = |s: f64| match self.ln_big_f(s) {
            Ok(lf) => (-(q.ln() + lf) / p).exp(),
            Err(_) => f64::NAN,
        };
        let mut increments = Vec::with_capacity(27);
        let mut partial = 0.0;
        for j in 1..=27 {
            let (a, b) = (2f64.powi(j - 1), 2f64.powi(j));
            let inc = gauss_kronrod(integrand, a, b, 1e-12, 0.0)?.value;
            partial += inc;
            increments.push(inc);
        }
        let n = increments.len();
        let ratio = increments[n - 1] / increments[n - 2];
        let confirmed = match integral_value {
            Some(v) if ratio < 1.0 => {
                let tail = increments[n - 1] * ratio / (1.0 - ratio);
                ((partial + tail) - v).abs() <= 1e-6 * v
            }
            Some(_) => false,
            None => ratio > 0.95,
        };
        Ok(KoVerdict { convergent, integral_value, p, tail_exponent: rho, confirmed })
    }

    /// Extrapolated limit of `t f'(t)/f(t)` as `t → ∞`.
    pub fn rv_index(&self) -> Result<f64> {
        let seq: Vec<f64> = log_grid().map(|x| self.index(x.exp())).collect();
        limit_or_flag("rv_index", &seq)
    }

    /// Limits of `F/(zf)` and of `F^{1/q}/(f ∫_z^∞ F^{−1/p})` as `z → ∞`,
    /// with their closed-form targets.
    pub fn ratio_limits(&self, p: f64) -> Result<RatioLimits> {
        let s = self.sigma;
        let mut g = Vec::new();
        let mut k = Vec::new();
        for x in log_grid() {
            let z = x.exp();
            let gz = self.normalized_primitive(z)?;
            g.push(gz);
            k.push(gz / self.normalized_tail(z, p)?);
        }
        Ok(RatioLimits {
            lim_f_over_zf: limit_or_flag("F/(z f)", &g)?,
            target_f_over_zf: 1.0 / (2.0 + s),
            lim_keller_ratio: limit_or_flag("Keller ratio", &k)?,
            target_keller_ratio: (s + 2.0 - p) / (p * (2.0 + s)),
        })
    }

    /// `f(0) = 0`, `f` nondecreasing on a log grid, and the RV index equal
    /// to `σ + 1` within 1e−3.
    pub fn check_invariants(&self) -> Result<()> {
        if self.f(0.0) != 0.0 {
            return Err(invalid("f", "f(0) must vanish"));
        }
        let mut last = 0.0;
        for i in 0..=180 {
            let u = 10f64.powf(-6.0 + i as f64 / 10.0);
            let v = self.f(u);
            if !(v >= last) || !v.is_finite() {
                return Err(invalid("f", format!("not nondecreasing near u = {u:e}")));
            }
            last = v;
        }
        let idx = self.rv_index()?;
        if (idx - (self.sigma + 1.0)).abs() > 1e-3 {
            return Err(invalid("f", format!("RV index {idx} differs from sigma + 1")));
        }
        Ok(())
    }
}

fn limit_or_flag(what: &'static str, seq: &[f64]) -> Result<f64> {
    let lim = aitken_limit(seq, 2);
    if lim.converged(LIMIT_AGREEMENT) {
        Ok(lim.value)
    } else {
        Err(Error::NonConvergent { what, last: lim.value, previous: lim.previous })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_primitive() {
        let f = NonlinearitySpec::power(3.0);
        assert!((f.big_f(2.0).unwrap() - 4.0).abs() < 1e-12);
        let f = NonlinearitySpec::power(2.0);
        assert!((f.big_f(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn normalized_primitive_matches_direct_primitive() {
        let f = NonlinearitySpec::new(1.5, SlowlyVarying::LogLog);
        for z in [0.5, 3.0, 40.0] {
            let direct = f.big_f(z).unwrap();
            let via_g = z * f.f(z) * f.normalized_primitive(z).unwrap();
            assert!((direct / via_g - 1.0).abs() < 1e-11, "z = {z}");
        }
    }

    #[test]
    fn slowly_varying_indices_match_differences() {
        for l in [SlowlyVarying::Log1p, SlowlyVarying::LogLog, SlowlyVarying::ExpLog(0.5)] {
            for u in [0.3, 7.0, 1e5] {
                let h = 1e-5;
                let num = (l.ln_value(u * (1.0 + h)) - l.ln_value(u * (1.0 - h))) / (2.0 * h);
                assert!((num - l.index(u)).abs() < 1e-7, "{l:?} at {u}");
            }
        }
    }

    #[test]
    fn parse_spellings() {
        assert!(matches!(SlowlyVarying::parse("explog:0.5").unwrap(), SlowlyVarying::ExpLog(a) if a == 0.5));
        assert!(SlowlyVarying::parse("explog:1.5").is_err());
        assert!(SlowlyVarying::parse("sqrt").is_err());
    }

    #[test]
    fn critical_case() {
        let v = NonlinearitySpec::power(1.0).keller_osserman(2.0).unwrap();
        assert!(!v.convergent && v.integral_value.is_none() && v.confirmed);
        let f = NonlinearitySpec::new(0.0, SlowlyVarying::Log1p);
        assert!(matches!(f.keller_osserman(2.0), Err(Error::Inconclusive(_))));
    }
}
