//! Boundary weight generators `k` and the limits that steer the rate
//! constants.
//!
//! With `K(t) = ∫₀^t s^{−α/2} k(s) ds` and `K'(t) = t^{−α/2} k(t)` every
//! quantity here is expressed through the scale-free kernel ratio
//!
//! ```text
//! ρ(t) = K(t) / (t K'(t)) = (2/(2−α)) ∫₀¹ k(w^{2/(2−α)} t) / k(t) dw,
//! ```
//!
//! the substitution `s = t·w^{2/(2−α)}` removing the `s^{−α/2}` singularity.
//! Then `K/K' = tρ`, `(K/K')' = 1 − ρ(λ − α/2)` with `λ = t k'/k`, and the
//! limits at `0⁺` are read off by extrapolation over `t = 10^{−2−j/2}`.

use crate::error::{invalid, Error, Result};
use crate::extrapolate::{aitken_limit, richardson, Limit};
use crate::interp::Pchip;
use crate::quadrature::tanh_sinh;
use crate::tolerances::{KERNEL_DIFF_STEP, L1_ZERO, LIMIT_AGREEMENT, QUAD_REL};
use crate::ScalarFn;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
}

/// Tabulated `k`, interpolated monotonically in log–log coordinates and
/// extended as a power law outside the table.
#[derive(Debug, Clone)]
pub struct TableKernel {
    interp: Pchip,
}

impl TableKernel {
    pub fn from_points(ts: &[f64], ks: &[f64]) -> Result<Self> {
        if ts.len() < 3 || ts.len() != ks.len() {
            return Err(invalid("table", "need at least three (t, k) rows"));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) || ts[0] <= 0.0 {
            return Err(invalid("table", "t must be positive and strictly increasing"));
        }
        if ks.iter().any(|k| !(*k > 0.0)) {
            return Err(invalid("table", "k must be positive"));
        }
        let lx = ts.iter().map(|t| t.ln()).collect();
        let ly = ks.iter().map(|k| k.ln()).collect();
        Ok(Self { interp: Pchip::new(lx, ly) })
    }

    pub fn last_t(&self) -> f64 {
        self.interp.xs().last().copied().unwrap_or(1.0).exp()
    }

    fn k(&self, t: f64) -> f64 {
        self.interp.eval(t.ln()).exp()
    }

    fn log_slope(&self, t: f64) -> f64 {
        self.interp.derivative(t.ln())
    }
}

#[derive(Clone)]
pub enum KernelKind {
    /// `t^q`
    Power { q: f64 },
    /// `ln(1 + t^q)`
    Log1pPower { q: f64 },
    /// `exp(t^q) − 1`
    Expm1Power { q: f64 },
    Table(TableKernel),
    Custom { name: String, k: ScalarFn, k_prime: Option<ScalarFn> },
}

impl fmt::Debug for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { q } => write!(f, "power(q={q})"),
            Self::Log1pPower { q } => write!(f, "log1p_power(q={q})"),
            Self::Expm1Power { q } => write!(f, "expm1_power(q={q})"),
            Self::Table(_) => write!(f, "table"),
            Self::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

/// Scale function `y` of the second-order classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YKind {
    /// `y(t) = t^ζ`
    PowerZeta { zeta: f64 },
    /// `y(t) = (−ln t)^{−τ}`
    LogTau { tau: f64 },
}

impl YKind {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::PowerZeta { zeta } => t.powf(zeta),
            Self::LogTau { tau } => (-t.ln()).powf(-tau),
        }
    }

    /// `t y'(t) / y(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match *self {
            Self::PowerZeta { zeta } => zeta,
            Self::LogTau { tau } => tau / -t.ln(),
        }
    }

    /// `t² y''(t) / y(t)`.
    pub fn second_log_derivative(&self, t: f64) -> f64 {
        match *self {
            Self::PowerZeta { zeta } => zeta * (zeta - 1.0),
            Self::LogTau { tau } => {
                let x = -t.ln();
                tau * (tau + 1.0) / (x * x) - tau / x
            }
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Self::LogTau { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecondOrderClass {
    /// `l₁ = 0`, `y = (−ln t)^{−τ}`, value `L*`.
    K0Tau,
    /// `l₁ = 0`, `y = t^ζ`, value `L_*`.
    K0Zeta,
    /// `l₁ ∈ (0, 1]`, `y = t^ζ`, value `E_k` (written `e_k` downstream).
    K01Zeta,
    /// `l₁ ∈ (0, 1]`, `y = (−ln t)^{−τ}`, value `L#`.
    K01Tau,
    Unclassified,
}

impl SecondOrderClass {
    pub fn name(&self) -> &'static str {
        match self {
            Self::K0Tau => "K0_tau",
            Self::K0Zeta => "K0_zeta",
            Self::K01Zeta => "K01_zeta",
            Self::K01Tau => "K01_tau",
            Self::Unclassified => "Unclassified",
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Self::K0Tau | Self::K01Tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaramataLimits {
    pub l0: f64,
    pub l1: f64,
    /// Limit of `t k'/k`; `None` when it diverges (class K₀).
    pub nrvz_index_k: Option<f64>,
    /// `l₁⁻¹ − 1 + α/2`, the value the index must take.
    pub nrvz_index_target: Option<f64>,
    /// Extrapolation scale that produced `l₁`: `"power"` or `"log"`.
    pub l1_scale: String,
    pub second_order_class: SecondOrderClass,
    pub second_order_value: Option<f64>,
    pub y_kind: Option<YKind>,
}

/// Membership diagnostics for the class: positivity, declared monotonicity,
/// integrability of `s^{−α/2}k` (enforced) and of `k` alone (reported).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub positive: bool,
    pub monotone: bool,
    pub weighted_integrable: bool,
    pub plain_integrable: bool,
}

#[derive(Clone, Debug)]
pub struct KaramataSpec {
    pub kind: KernelKind,
    pub alpha: f64,
    pub nu: f64,
    pub monotonicity: Monotonicity,
}

/// `t_j = 10^{−2−j/2}`, `j = 0..14`.
pub fn limit_grid() -> Vec<f64> {
    (0..15).map(|j| 10f64.powf(-2.0 - j as f64 / 2.0)).collect()
}

impl KaramataSpec {
    pub fn new(kind: KernelKind, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 2.0) {
            return Err(Error::NonIntegrableWeight { alpha });
        }
        let (nu, monotonicity) = match &kind {
            KernelKind::Power { q } => {
                (1.0, if *q >= 0.0 { Monotonicity::Nondecreasing } else { Monotonicity::Nonincreasing })
            }
            KernelKind::Log1pPower { q } | KernelKind::Expm1Power { q } => {
                if !(*q > 0.0) {
                    return Err(invalid("q", "must be positive for log1p/expm1 kernels"));
                }
                (1.0, Monotonicity::Nondecreasing)
            }
            KernelKind::Table(t) => (t.last_t(), Monotonicity::Nondecreasing),
            KernelKind::Custom { .. } => (1.0, Monotonicity::Nondecreasing),
        };
        Ok(Self { kind, alpha, nu, monotonicity })
    }

    pub fn power(q: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelKind::Power { q }, alpha)
    }

    pub fn custom(
        name: &str,
        k: impl Fn(f64) -> f64 + Send + Sync + 'static,
        k_prime: Option<ScalarFn>,
        alpha: f64,
    ) -> Result<Self> {
        Self::new(KernelKind::Custom { name: name.into(), k: Arc::new(k), k_prime }, alpha)
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_monotonicity(mut self, m: Monotonicity) -> Self {
        self.monotonicity = m;
        self
    }

    pub fn k(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::Power { q } => t.powf(*q),
            KernelKind::Log1pPower { q } => t.powf(*q).ln_1p(),
            KernelKind::Expm1Power { q } => t.powf(*q).exp_m1(),
            KernelKind::Table(tab) => tab.k(t),
            KernelKind::Custom { k, .. } => k(t),
        }
    }

    /// `k(v t) / k(t)` without forming tiny or huge intermediates where the
    /// kind allows it.
    pub fn k_ratio(&self, t: f64, v: f64) -> f64 {
        match &self.kind {
            KernelKind::Power { q } => v.powf(*q),
            KernelKind::Log1pPower { q } => {
                let x = t.powf(*q);
                (v.powf(*q) * x).ln_1p() / x.ln_1p()
            }
            KernelKind::Expm1Power { q } => {
                let x = t.powf(*q);
                (v.powf(*q) * x).exp_m1() / x.exp_m1()
            }
            KernelKind::Table(tab) => (tab.interp.eval((v * t).ln()) - tab.interp.eval(t.ln())).exp(),
            KernelKind::Custom { k, .. } => k(v * t) / k(t),
        }
    }

    /// `λ(t) = t k'(t) / k(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::Power { q } => *q,
            KernelKind::Log1pPower { q } => {
                let x = t.powf(*q);
                q * x / ((1.0 + x) * x.ln_1p())
            }
            KernelKind::Expm1Power { q } => {
                let x = t.powf(*q);
                q * x * x.exp() / x.exp_m1()
            }
            KernelKind::Table(tab) => tab.log_slope(t),
            KernelKind::Custom { k, k_prime, .. } => {
                let kp = match k_prime {
                    Some(kp) => kp(t),
                    None => central_difference(|s| k(s), t),
                };
                t * kp / k(t)
            }
        }
    }

    fn differenced(&self) -> bool {
        matches!(&self.kind, KernelKind::Custom { k_prime: None, .. })
    }

    pub fn k_prime(&self, t: f64) -> f64 {
        self.k(t) * self.log_derivative(t) / t
    }

    /// `K'(t) = t^{−α/2} k(t)`.
    pub fn big_k_prime(&self, t: f64) -> f64 {
        t.powf(-0.5 * self.alpha) * self.k(t)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t > 0.0 && t <= self.nu * (1.0 + 1e-12)) {
            return Err(Error::Domain { what: "t", value: t });
        }
        Ok(())
    }

    /// `ρ(t) = K(t) / (t K'(t))`.
    pub fn kernel_ratio(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        let c = 2.0 / (2.0 - self.alpha);
        let est = tanh_sinh(|w| self.k_ratio(t, w.powf(c)), 0.0, 1.0, QUAD_REL)
            .map_err(|_| Error::NonIntegrableWeight { alpha: self.alpha })?;
        let value = c * est.value;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonIntegrableWeight { alpha: self.alpha });
        }
        Ok(value)
    }

    /// `K(t) = ∫₀^t s^{−α/2} k(s) ds`.
    pub fn big_k(&self, t: f64) -> Result<f64> {
        Ok(t * self.big_k_prime(t) * self.kernel_ratio(t)?)
    }

    /// `K(t) / K'(t)`.
    pub fn k_over_k_prime(&self, t: f64) -> Result<f64> {
        Ok(t * self.kernel_ratio(t)?)
    }

    /// `(K/K')'(t) = 1 − K K''/K'^2`.
    pub fn ratio_derivative(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.kernel_ratio(t)? * (self.log_derivative(t) - 0.5 * self.alpha))
    }

    /// `K K'' / K'^2`.
    pub fn curvature_ratio(&self, t: f64) -> Result<f64> {
        Ok(self.kernel_ratio(t)? * (self.log_derivative(t) - 0.5 * self.alpha))
    }

    fn sample<F: Fn(f64) -> Result<f64>>(&self, g: F) -> Result<(Vec<f64>, Vec<f64>)> {
        let ts = limit_grid();
        let vs = ts.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
        Ok((ts, vs))
    }

    /// Richardson in `t` handles integer-power corrections; Aitken on the
    /// geometric grid handles `t^s` for any `s > 0`. The estimate with the
    /// smaller gap wins.
    fn power_scale_limit(&self, ts: &[f64], vs: &[f64]) -> Limit {
        let r = richardson(ts, vs, 2);
        let a = aitken_limit(vs, 2);
        // Aitken maps a divergent geometric sequence to its antilimit; only
        // trust it close to the data.
        let n = vs.len();
        let spread = (vs[n - 1] - vs[n - 3]).abs().max((vs[n - 1] - vs[n - 2]).abs());
        let contracting = (vs[n - 1] - vs[n - 2]).abs() < (vs[n - 2] - vs[n - 3]).abs();
        let near = contracting && (a.value - vs[n - 1]).abs() <= 2.0 * spread;
        if a.value.is_finite() && near && a.gap() < r.gap() {
            a
        } else {
            r
        }
    }

    fn log_scale_limit(&self, ts: &[f64], vs: &[f64]) -> Limit {
        let s: Vec<f64> = ts.iter().map(|t| -1.0 / t.ln()).collect();
        richardson(&s, vs, 2)
    }

    /// Estimates `l₀`, `l₁` and the NRVZ index of `k`.
    pub fn estimate_limits(&self) -> Result<KaramataLimits> {
        let (ts, ratio) = self.sample(|t| self.k_over_k_prime(t))?;
        let l0 = self.power_scale_limit(&ts, &ratio);
        if !l0.converged(LIMIT_AGREEMENT) {
            return Err(Error::NonConvergent { what: "l0", last: l0.value, previous: l0.previous });
        }
        let (_, g) = self.sample(|t| self.ratio_derivative(t))?;
        let mut scale = "power";
        let mut l1 = self.power_scale_limit(&ts, &g);
        if !l1.converged(LIMIT_AGREEMENT) {
            scale = "log";
            l1 = self.log_scale_limit(&ts, &g);
            if !l1.converged(LIMIT_AGREEMENT) {
                return Err(Error::NonConvergent { what: "l1", last: l1.value, previous: l1.previous });
            }
        }
        let l1v = if l1.value.abs() < L1_ZERO { 0.0 } else { l1.value };

        let lam: Vec<f64> = ts.iter().map(|&t| self.log_derivative(t)).collect();
        let idx = if scale == "power" {
            self.power_scale_limit(&ts, &lam)
        } else {
            self.log_scale_limit(&ts, &lam)
        };
        let nrvz_index_k = (l1v != 0.0 && idx.converged(LIMIT_AGREEMENT)).then_some(idx.value);
        let nrvz_index_target = (l1v != 0.0).then(|| 1.0 / l1v - 1.0 + 0.5 * self.alpha);
        Ok(KaramataLimits {
            l0: l0.value,
            l1: l1v,
            nrvz_index_k,
            nrvz_index_target,
            l1_scale: scale.into(),
            second_order_class: SecondOrderClass::Unclassified,
            second_order_value: None,
            y_kind: None,
        })
    }

    /// Second-order limit `lim (1/y)((K/K')' − l₁)` and its class.
    pub fn second_order_limit(&self, y: YKind) -> Result<(SecondOrderClass, f64)> {
        let limits = self.estimate_limits()?;
        self.second_order_with(limits.l1, y)
    }

    /// As [`Self::second_order_limit`] with `l₁` supplied.
    pub fn second_order_with(&self, l1: f64, y: YKind) -> Result<(SecondOrderClass, f64)> {
        let (mut ts, mut h) = self.sample(|t| Ok((self.ratio_derivative(t)? - l1) / y.eval(t)))?;
        // Rounding in (K/K')' is ~1e−16 relative, ~1e−10 when k' is
        // differenced; keep only nodes where dividing by y leaves it small.
        let y_floor = if self.differenced() { 1e-4 } else { 1e-8 };
        let keep = ts.iter().take_while(|&&t| y.eval(t) >= y_floor).count().max(6);
        ts.truncate(keep);
        h.truncate(keep);
        let lim = if y.is_log() { self.log_scale_limit(&ts, &h) } else { self.power_scale_limit(&ts, &h) };
        if !lim.converged(LIMIT_AGREEMENT) {
            let tail = &h[h.len() - 6..];
            let growing = tail.windows(2).all(|w| w[1].abs() > w[0].abs());
            if growing && tail[5].abs() > 4.0 * tail[0].abs() {
                return Err(Error::WrongScale);
            }
            return Err(Error::NonConvergent { what: "second-order limit", last: lim.value, previous: lim.previous });
        }
        let class = match (l1 == 0.0, y.is_log()) {
            (true, true) => SecondOrderClass::K0Tau,
            (true, false) => SecondOrderClass::K0Zeta,
            (false, false) if l1 <= 1.0 => SecondOrderClass::K01Zeta,
            (false, true) if l1 <= 1.0 => SecondOrderClass::K01Tau,
            _ => SecondOrderClass::Unclassified,
        };
        Ok((class, lim.value))
    }

    /// Dual limit `K (K')' / K'^2 → 1 − l₁`, with `(K')'` taken by
    /// central differences of `K'` so that it does not reuse `k'`. Returns
    /// `|limit − (1 − l₁)|`.
    pub fn dual_limit_check(&self) -> Result<f64> {
        let limits = self.estimate_limits()?;
        let (ts, v) = self.sample(|t| {
            let h = t * KERNEL_DIFF_STEP;
            let d = (self.big_k_prime(t + h) - self.big_k_prime(t - h)) / (2.0 * h);
            Ok(self.kernel_ratio(t)? * t * d / self.big_k_prime(t))
        })?;
        let lim = if limits.l1_scale == "log" {
            self.log_scale_limit(&ts, &v)
        } else {
            self.power_scale_limit(&ts, &v)
        };
        if !lim.converged(LIMIT_AGREEMENT) {
            return Err(Error::NonConvergent { what: "dual limit", last: lim.value, previous: lim.previous });
        }
        Ok((lim.value - (1.0 - limits.l1)).abs())
    }

    /// Positivity and monotonicity on a log grid in `(0, ν)`, and
    /// integrability at `0⁺` judged from the log-slope of `k` there.
    pub fn membership(&self) -> Membership {
        let grid: Vec<f64> = (0..=80).map(|i| self.nu * 10f64.powf(-8.0 * (1.0 - i as f64 / 80.0))).collect();
        let ks: Vec<f64> = grid.iter().map(|&t| self.k(t)).collect();
        let positive = ks.iter().all(|k| *k > 0.0 && k.is_finite());
        let monotone = ks.windows(2).all(|w| match self.monotonicity {
            Monotonicity::Nondecreasing => w[1] >= w[0] * (1.0 - 1e-12),
            Monotonicity::Nonincreasing => w[1] <= w[0] * (1.0 + 1e-12),
        });
        let lam = self.log_derivative(grid[0]);
        Membership {
            positive,
            monotone,
            weighted_integrable: lam - 0.5 * self.alpha > -1.0,
            plain_integrable: lam > -1.0,
        }
    }

    pub fn validate(&self) -> Result<Membership> {
        let m = self.membership();
        if !m.positive {
            return Err(invalid("k", "must be positive on (0, nu)"));
        }
        if !m.monotone {
            return Err(invalid("k", format!("not {:?} on (0, nu)", self.monotonicity)));
        }
        if !m.weighted_integrable {
            return Err(Error::NonIntegrableWeight { alpha: self.alpha });
        }
        Ok(m)
    }
}

fn central_difference<F: Fn(f64) -> f64>(g: F, t: f64) -> f64 {
    let h = t * KERNEL_DIFF_STEP;
    (g(t + h) - g(t - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_ratio_of_power_is_l1() {
        for (q, a) in [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (0.5, -0.5), (-0.2, 0.3)] {
            let s = KaramataSpec::power(q, a).unwrap();
            let r = s.kernel_ratio(1e-3).unwrap();
            assert!((r - 1.0 / (1.0 + q - a / 2.0)).abs() < 1e-13, "q={q} a={a}");
        }
    }

    #[test]
    fn rejects_alpha_two() {
        assert!(matches!(KaramataSpec::power(1.0, 2.0), Err(Error::NonIntegrableWeight { .. })));
    }

    #[test]
    fn domain_error_outside_nu() {
        let s = KaramataSpec::power(1.0, 0.0).unwrap();
        assert!(matches!(s.big_k(1.5), Err(Error::Domain { .. })));
        assert!(matches!(s.big_k(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn table_kernel_tracks_power() {
        let ts: Vec<f64> = (0..60).map(|i| 10f64.powf(-6.0 + i as f64 * 0.1)).collect();
        let ks: Vec<f64> = ts.iter().map(|t| t.powf(1.5)).collect();
        let s = KaramataSpec::new(KernelKind::Table(TableKernel::from_points(&ts, &ks).unwrap()), 0.0).unwrap();
        assert!((s.log_derivative(1e-8) - 1.5).abs() < 1e-10);
        let l = s.estimate_limits().unwrap();
        assert!((l.l1 - 0.4).abs() < 1e-8);
    }

    #[test]
    fn custom_kernel_without_derivative() {
        let s = KaramataSpec::custom("t(1+t)", |t| t * (1.0 + t), None, 0.0).unwrap();
        let (class, v) = s.second_order_limit(YKind::PowerZeta { zeta: 1.0 }).unwrap();
        assert_eq!(class, SecondOrderClass::K01Zeta);
        assert!((v + 1.0 / 3.0).abs() < 1e-4, "{v}");
    }
}
