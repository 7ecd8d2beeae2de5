//! Measures blow-up rates on computed profiles and compares them with the
//! closed-form predictions.

use crate::asymptotics::{self, Adjudication, Variant};
use crate::error::{invalid, Error, Result};
use crate::extrapolate::aitken_limit;
use crate::karamata::{KaramataSpec, YKind};
use crate::radial::{RadialProblem, SolutionProfile};
use crate::tolerances::{
    DECOMPOSITION_SLOPE, FIT_CONSTANT, FIT_EXPONENT, FIT_MIN_POINTS, FIT_SECOND_ORDER, FIT_STDERR_FLOOR,
    KARAMATA_LIMIT, SECOND_ORDER_RESOLUTION,
};
use crate::transform::PhiTransform;
use serde::{Deserialize, Serialize};

/// Closed range of boundary distances used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { d_min: 1e-5, d_max: 1e-2 }
    }
}

impl Window {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min > 0.0 && d_max > d_min) {
            return Err(invalid("window", "need 0 < d_min < d_max"));
        }
        Ok(Self { d_min, d_max })
    }

    /// Node indices inside the window, ordered from the largest distance
    /// towards the boundary.
    fn select(&self, profile: &SolutionProfile) -> Result<Vec<usize>> {
        let mut idx: Vec<usize> =
            (0..profile.len()).filter(|&i| profile.d[i] >= self.d_min && profile.d[i] <= self.d_max).collect();
        idx.sort_by(|&a, &b| profile.d[b].total_cmp(&profile.d[a]));
        if idx.len() < FIT_MIN_POINTS {
            return Err(Error::WindowTooSmall { points: idx.len(), required: FIT_MIN_POINTS });
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    /// Not judged: the regression error is too large for the tolerance, or
    /// the quantity is ill-conditioned and the failure is documented.
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub quantity: String,
    pub measured: f64,
    pub expected: f64,
    /// Relative error, or absolute when `expected = 0`.
    pub error: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl Verdict {
    /// Judges `measured` against `expected` with a relative tolerance. The
    /// verdict is only decisive when `stderr < tolerance / 3`.
    pub fn judge(quantity: &str, measured: f64, stderr: f64, expected: f64, tolerance: f64) -> Self {
        let scale = if expected == 0.0 { 1.0 } else { expected.abs() };
        let error = (measured - expected).abs() / scale;
        let rel_stderr = stderr / scale;
        let status = if !error.is_finite() || !(rel_stderr < tolerance / 3.0) {
            Status::Warn
        } else if error <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self { quantity: quantity.into(), measured, expected, error, stderr, tolerance, status }
    }
}

/// Relative verdict tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub exponent: f64,
    pub constant: f64,
    pub second_order: f64,
    /// Absolute tolerance for Karamata limits.
    pub limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exponent: FIT_EXPONENT, constant: FIT_CONSTANT, second_order: FIT_SECOND_ORDER, limit: KARAMATA_LIMIT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub beta_hat: f64,
    pub c_hat: f64,
    pub stderr_beta: f64,
    /// Standard error of `C_hat` (delta method on the intercept).
    pub stderr_c: f64,
    pub window: Window,
    pub points: usize,
}

/// Least squares of `ln u` on `ln d`: `β̂ = −slope`, `Ĉ = e^{intercept}`.
pub fn fit_power(profile: &SolutionProfile, window: Window) -> Result<PowerFit> {
    if !profile.meta.blow_up {
        return Err(invalid("profile", "fit_power needs a blow-up profile"));
    }
    let idx = window.select(profile)?;
    let xs: Vec<f64> = idx.iter().map(|&i| profile.d[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| profile.u[i].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let s2 = sse / (n - 2.0);
    let se_slope = (s2 / sxx).sqrt();
    let se_icpt = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let c_hat = icpt.exp();
    Ok(PowerFit {
        beta_hat: -slope,
        c_hat,
        stderr_beta: se_slope,
        stderr_c: c_hat * se_icpt,
        window,
        points: idx.len(),
    })
}

/// Limit of a sequence approaching its value geometrically, with a
/// last-value fallback when acceleration misbehaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    pub stderr: f64,
    pub accelerated: bool,
}

/// Thins `seq` to roughly three samples per decade of `ds`, then applies
/// Aitken Δ². The error estimate combines the last Aitken step with the
/// profile accuracy floor `FIT_STDERR_FLOOR`.
fn extrapolate_to_boundary(ds: &[f64], seq: &[f64]) -> Extrapolated {
    let n = seq.len();
    let per_decade = if n > 1 { (n - 1) as f64 / (ds[0] / ds[n - 1]).log10() } else { 1.0 };
    let stride = ((per_decade / 3.0).round() as usize).max(1);
    let mut thin: Vec<f64> = (0..n).rev().step_by(stride).map(|i| seq[i]).collect();
    thin.reverse();
    let last = seq[n - 1];
    let floor = FIT_STDERR_FLOOR * last.abs().max(1.0);
    let spread = thin.iter().rev().take(3).fold(0.0f64, |m, v| m.max((v - last).abs()));
    if thin.len() >= 4 {
        let lim = aitken_limit(&thin, 1);
        // Acceleration should not move the estimate further than the data
        // themselves have moved over the last few samples.
        if lim.value.is_finite() && (lim.value - last).abs() <= 2.0 * spread.max(floor) {
            return Extrapolated { value: lim.value, stderr: lim.gap().hypot(floor), accelerated: true };
        }
    }
    Extrapolated { value: last, stderr: (2.0 * spread).hypot(floor), accelerated: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    pub xi_hat: f64,
    pub stderr: f64,
    pub accelerated: bool,
    /// Limit of `b / (d^{α−αp/2} k^p(d))` at the finest window node.
    pub c_hat: f64,
    /// Log-log slope of that quotient over the window.
    pub decomposition_slope: f64,
    pub window: Window,
    /// `(d, u / φ(K(d)))` on the window.
    pub trace: Vec<(f64, f64)>,
}

/// `u / φ(K(d))` on the window, extrapolated to the boundary.
pub fn first_order_ratio(
    profile: &SolutionProfile,
    problem: &RadialProblem,
    kernel: &KaramataSpec,
    transform: &PhiTransform,
    window: Window,
) -> Result<RatioFit> {
    if kernel.alpha != problem.alpha || transform.p != problem.p {
        return Err(invalid("kernel", "alpha and p must match the problem"));
    }
    let idx = window.select(profile)?;
    let (a, p) = (problem.alpha, problem.p);
    let ln_s: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let d = profile.d[i];
            problem.coefficient.ln_value(profile.r[i], d) - (a - 0.5 * a * p) * d.ln() - p * kernel.k(d).ln()
        })
        .collect();
    let (d0, d1) = (profile.d[idx[0]], profile.d[*idx.last().unwrap()]);
    let slope = (ln_s[ln_s.len() - 1] - ln_s[0]) / (d1.ln() - d0.ln());
    if !(slope.abs() <= DECOMPOSITION_SLOPE) {
        return Err(Error::DecompositionMismatch { slope });
    }
    let mut trace = Vec::with_capacity(idx.len());
    for &i in &idx {
        let d = profile.d[i];
        trace.push((d, profile.u[i] / transform.phi(kernel.big_k(d)?)?));
    }
    let ds: Vec<f64> = trace.iter().map(|t| t.0).collect();
    let rs: Vec<f64> = trace.iter().map(|t| t.1).collect();
    let ex = extrapolate_to_boundary(&ds, &rs);
    Ok(RatioFit {
        xi_hat: ex.value,
        stderr: ex.stderr,
        accelerated: ex.accelerated,
        c_hat: ln_s[ln_s.len() - 1].exp(),
        decomposition_slope: slope,
        window,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderFit {
    pub chi_hat: f64,
    pub stderr: f64,
    pub accelerated: bool,
    /// `y(t) = t`, which the second-order hypothesis excludes (`t/y → 0`).
    pub outside_hypothesis: bool,
    pub window: Window,
    /// `(d, (u/(ξ₀φ(K(d))) − 1)/y(d))` on the window.
    pub trace: Vec<(f64, f64)>,
}

/// `χ̂` from `u = ξ₀φ(K(d))(1 + χ y(d) + o(y))`.
///
/// When a first-order fit is supplied, its `ξ̂` must agree with `xi0` to
/// within three standard errors.
pub fn second_order_correction(
    profile: &SolutionProfile,
    xi0: f64,
    first: Option<&RatioFit>,
    kernel: &KaramataSpec,
    transform: &PhiTransform,
    y: YKind,
    window: Window,
) -> Result<SecondOrderFit> {
    if transform.p != 2.0 {
        return Err(invalid("p", "second-order fits are for p = 2"));
    }
    let finest = profile.finest_distance();
    if finest > SECOND_ORDER_RESOLUTION {
        return Err(Error::InsufficientResolution { finest, required: SECOND_ORDER_RESOLUTION });
    }
    if let Some(f) = first {
        if (f.xi_hat - xi0).abs() > 3.0 * f.stderr {
            return Err(Error::FirstOrderMismatch { measured: f.xi_hat, expected: xi0 });
        }
    }
    let idx = window.select(profile)?;
    let mut trace = Vec::with_capacity(idx.len());
    for &i in &idx {
        let d = profile.d[i];
        let lead = xi0 * transform.phi(kernel.big_k(d)?)?;
        trace.push((d, (profile.u[i] / lead - 1.0) / y.eval(d)));
    }
    let ds: Vec<f64> = trace.iter().map(|t| t.0).collect();
    let cs: Vec<f64> = trace.iter().map(|t| t.1).collect();
    let ex = extrapolate_to_boundary(&ds, &cs);
    // The floor is relative to the ratio, i.e. absolute before dividing by y.
    let y_min = y.eval(ds[ds.len() - 1]);
    let stderr = ex.stderr.hypot(FIT_STDERR_FLOOR / y_min);
    Ok(SecondOrderFit {
        chi_hat: ex.value,
        stderr,
        accelerated: ex.accelerated,
        outside_hypothesis: y == YKind::PowerZeta { zeta: 1.0 },
        window,
        trace,
    })
}

/// Everything measured on one profile, with verdicts against a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub beta_hat: f64,
    pub c_hat: f64,
    pub xi_hat: Option<f64>,
    pub chi_hat: Option<f64>,
    pub window: Window,
    pub stderr: FitErrors,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitErrors {
    pub beta: f64,
    pub c: f64,
    pub xi: Option<f64>,
    pub chi: Option<f64>,
}

impl RateFit {
    pub fn new(power: &PowerFit, ratio: Option<&RatioFit>, second: Option<&SecondOrderFit>) -> Self {
        Self {
            beta_hat: power.beta_hat,
            c_hat: power.c_hat,
            xi_hat: ratio.map(|r| r.xi_hat),
            chi_hat: second.map(|s| s.chi_hat),
            window: power.window,
            stderr: FitErrors {
                beta: power.stderr_beta,
                c: power.stderr_c,
                xi: ratio.map(|r| r.stderr),
                chi: second.map(|s| s.stderr),
            },
            verdicts: Vec::new(),
        }
    }

    /// Adds one verdict per quantity that both sides provide.
    pub fn judge(&mut self, prediction: &asymptotics::AsymptoticPrediction, tol: &Tolerances) {
        let mut v = Vec::new();
        if let Some(beta) = prediction.beta {
            v.push(Verdict::judge("beta", self.beta_hat, self.stderr.beta, beta, tol.exponent));
        }
        if let Some(psi) = prediction.psi_r {
            v.push(Verdict::judge("C", self.c_hat, self.stderr.c, psi, tol.constant));
        }
        if let (Some(x), Some(e), Some(xi0)) = (self.xi_hat, self.stderr.xi, prediction.xi0) {
            v.push(Verdict::judge("xi0", x, e, xi0, tol.constant));
        }
        if let (Some(c), Some(e), Some(chi)) = (self.chi_hat, self.stderr.chi, prediction.chi) {
            v.push(Verdict::judge("chi", c, e, chi, tol.second_order));
        }
        self.verdicts = v;
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Pass)
    }
}

/// One member of an adjudication family: anchored interval on `(0, 1)`,
/// `w = d^α`, `f = u^{σ+1}`, `b = d^{α−αp/2} k(d)^p` with `k = t^{q_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjudicationCase {
    pub p: f64,
    pub alpha: f64,
    pub sigma: f64,
    /// Defaults to `α/2 − α/p`, for which `b ≡ 1`.
    pub kernel_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case: AdjudicationCase,
    pub l1: f64,
    pub xi_hat: f64,
    pub stderr: f64,
    pub xi_theorem: f64,
    pub xi_proof: f64,
    pub xi_matched: f64,
    /// `|ξ̂ − ξ_variant| / stderr`.
    pub margin_theorem: f64,
    pub margin_proof: f64,
    pub margin_matched: f64,
    pub verdict: Adjudication,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationReport {
    pub cases: Vec<CaseOutcome>,
    pub window: Window,
}

/// Variants within two standard errors of the measurement are consistent.
pub fn classify(xi_hat: f64, stderr: f64, theorem: f64, proof: f64) -> Adjudication {
    if theorem == proof {
        return Adjudication::InconclusiveByDesign;
    }
    let ok = |x: f64| (xi_hat - x).abs() <= 2.0 * stderr;
    match (ok(theorem), ok(proof)) {
        (true, true) => Adjudication::Inconclusive,
        (true, false) => Adjudication::Theorem,
        (false, true) => Adjudication::Proof,
        (false, false) => Adjudication::Neither,
    }
}

pub fn adjudicate_case(case: AdjudicationCase, window: Window) -> Result<CaseOutcome> {
    let AdjudicationCase { p, alpha, sigma, kernel_q } = case;
    let qk = kernel_q.unwrap_or(0.5 * alpha - alpha / p);
    let kernel = KaramataSpec::power(qk, alpha)?;
    let nl = crate::NonlinearitySpec::power(sigma + 1.0);
    let mut problem = RadialProblem::interval(1.0, p, alpha, nl.clone())?;
    if kernel_q.is_some() {
        problem = problem.with_coefficient(crate::Coefficient::karamata(1.0, kernel.clone(), p, 0.0, 1.0));
    }
    let transform = PhiTransform::new(nl, p)?;
    let bracket = problem.critical_bracket()?;
    let profile = problem.critical_profile(&bracket)?;
    let fit = first_order_ratio(&profile, &problem, &kernel, &transform, window)?;
    let l1 = 1.0 / (1.0 + qk - 0.5 * alpha);
    let x = |v| asymptotics::xi(p, alpha, sigma, l1, 1.0, v);
    let (xt, xp, xm) = (x(Variant::TheoremNumerator2)?, x(Variant::ProofNumeratorP)?, x(Variant::Matched)?);
    let m = |v: f64| (fit.xi_hat - v).abs() / fit.stderr;
    Ok(CaseOutcome {
        case,
        l1,
        xi_hat: fit.xi_hat,
        stderr: fit.stderr,
        xi_theorem: xt,
        xi_proof: xp,
        xi_matched: xm,
        margin_theorem: m(xt),
        margin_proof: m(xp),
        margin_matched: m(xm),
        verdict: classify(fit.xi_hat, fit.stderr, xt, xp),
    })
}

/// Measures `ξ̂` for each case and reports which numerator variant it
/// supports. Fails with `Inconclusive` when no case can discriminate.
pub fn adjudicate_variant(family: &[AdjudicationCase], window: Window) -> Result<AdjudicationReport> {
    let cases = family.iter().map(|&c| adjudicate_case(c, window)).collect::<Result<Vec<_>>>()?;
    let decisive = cases
        .iter()
        .any(|c| !matches!(c.verdict, Adjudication::Inconclusive | Adjudication::InconclusiveByDesign));
    let controls_only = cases.iter().all(|c| c.verdict == Adjudication::InconclusiveByDesign);
    if !decisive && !controls_only {
        return Err(Error::Inconclusive("every variant lies within measurement error".into()));
    }
    Ok(AdjudicationReport { cases, window })
}
