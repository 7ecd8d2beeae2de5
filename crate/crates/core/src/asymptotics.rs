//! Closed-form rate constants and the proof-level limits behind them.

use crate::error::{invalid, Error, Result};
use crate::extrapolate::{richardson, Limit};
use crate::karamata::{KaramataSpec, SecondOrderClass, YKind};
use crate::transform::PhiTransform;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Numerator used for `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `2 + l₁(1−α)(2+σ−p)`.
    TheoremNumerator2,
    /// `p + l₁(1−α)(2+σ−p)`.
    ProofNumeratorP,
    /// `p + l₁(1 − α/(p−1))(2+σ−p)`: the value that reproduces the
    /// one-dimensional constant for pure powers.
    Matched,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::TheoremNumerator2 => "theorem",
            Variant::ProofNumeratorP => "proof",
            Variant::Matched => "matched",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(Variant::TheoremNumerator2),
            "proof" => Ok(Variant::ProofNumeratorP),
            "matched" => Ok(Variant::Matched),
            _ => Err(invalid("variant", "expected theorem, proof or matched")),
        }
    }

    fn numerator(&self, p: f64, alpha: f64, l1: f64, e: f64) -> f64 {
        match self {
            Variant::TheoremNumerator2 => 2.0 + l1 * (1.0 - alpha) * e,
            Variant::ProofNumeratorP => p + l1 * (1.0 - alpha) * e,
            Variant::Matched => p + l1 * (1.0 - alpha / (p - 1.0)) * e,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneDimensional {
    pub beta: f64,
    pub psi_r: f64,
    /// `α ≥ p − 1`: the formula is evaluated but lies outside the theory.
    pub outside_theory: bool,
}

/// `β = (p+γ−α)/(q−p+1)`, `ψ(R) = [β^{p−1}((β+1)(p−1)−α)/B(R)]^{1/(q−p+1)}`.
pub fn predict_1d(p: f64, alpha: f64, power_q: f64, gamma: f64, b_at_r: f64) -> Result<OneDimensional> {
    let e = power_q - (p - 1.0);
    if e == 0.0 {
        return Err(Error::DegenerateExponent);
    }
    if e < 0.0 {
        return Err(Error::NoBlowUp { power_q, pm1: p - 1.0 });
    }
    if !(b_at_r > 0.0) {
        return Err(invalid("B_at_R", "must be positive"));
    }
    let beta = (p + gamma - alpha) / e;
    let base = beta.powf(p - 1.0) * ((beta + 1.0) * (p - 1.0) - alpha) / b_at_r;
    Ok(OneDimensional { beta, psi_r: base.powf(1.0 / e), outside_theory: alpha >= p - 1.0 })
}

/// `ξ = (numerator / (b(2+σ)))^{1/(2+σ−p)}`.
pub fn xi(p: f64, alpha: f64, sigma: f64, l1: f64, b: f64, variant: Variant) -> Result<f64> {
    let e = sigma + 2.0 - p;
    if !(e > 0.0) {
        return Err(invalid("sigma", "must exceed p - 2"));
    }
    if !(b > 0.0) {
        return Err(invalid("b", "must be positive"));
    }
    let num = variant.numerator(p, alpha, l1, e);
    if !(num > 0.0) {
        return Err(invalid("l1", "numerator of xi is not positive"));
    }
    Ok((num / (b * (2.0 + sigma))).powf(1.0 / e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrder {
    pub xi0: Option<f64>,
    pub xi1: f64,
    pub xi2: f64,
    pub variant: Variant,
}

#[allow(clippy::too_many_arguments)]
pub fn predict_first_order(
    p: f64,
    alpha: f64,
    sigma: f64,
    l1: f64,
    b1: f64,
    b2: f64,
    c: Option<f64>,
    variant: Variant,
) -> Result<FirstOrder> {
    if b1 > b2 {
        return Err(invalid("b1", "must not exceed b2"));
    }
    if l1 < 0.0 {
        return Err(invalid("l1", "must be nonnegative"));
    }
    Ok(FirstOrder {
        xi0: c.map(|c| xi(p, alpha, sigma, l1, c, variant)).transpose()?,
        xi1: xi(p, alpha, sigma, l1, b1, variant)?,
        xi2: xi(p, alpha, sigma, l1, b2, variant)?,
        variant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GLimit {
    pub value: f64,
    /// Set when the table leaves the value at a jump undetermined; both
    /// one-sided values are reported.
    pub one_sided: Option<(f64, f64)>,
}

/// `G(θ, y) = lim r^θ / y(r)` following the case table: `y = r` for `ζ = 1`,
/// `H(ζ − θ)` for other power scales, `0` for logarithmic scales.
pub fn g_limit(theta: f64, y: YKind) -> Result<GLimit> {
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    match y {
        YKind::LogTau { .. } => Ok(GLimit { value: 0.0, one_sided: None }),
        YKind::PowerZeta { zeta: 1.0 } => {
            if theta == 1.0 {
                Ok(GLimit { value: 1.0, one_sided: None })
            } else if theta > 1.0 {
                Ok(GLimit { value: 0.0, one_sided: None })
            } else {
                Err(Error::Unsupported(format!("r^{theta}/r diverges")))
            }
        }
        YKind::PowerZeta { zeta } => {
            if !(zeta > 0.0) {
                return Err(Error::Unsupported(format!("zeta = {zeta}")));
            }
            let s = zeta - theta;
            if s > 0.0 {
                Ok(GLimit { value: 1.0, one_sided: None })
            } else if s < 0.0 {
                Ok(GLimit { value: 0.0, one_sided: None })
            } else {
                Ok(GLimit { value: 1.0, one_sided: Some((0.0, 1.0)) })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiInputs {
    pub p: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub l1: f64,
    /// `e_k`, `L_*`, `L*` or `L#` according to `class`.
    pub second_value: f64,
    pub b0: f64,
    pub theta: f64,
    pub y: YKind,
    pub class: SecondOrderClass,
}

/// Second-order coefficient `χ` (semilinear case only).
pub fn predict_chi(c: &ChiInputs) -> Result<f64> {
    if c.p != 2.0 {
        return Err(invalid("p", "second-order theory is for p = 2 only"));
    }
    if !(c.sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    if c.class == SecondOrderClass::Unclassified || c.class.is_log() != c.y.is_log() {
        return Err(Error::WrongClass { class: c.class.name() });
    }
    let (s, a, l1) = (c.sigma, c.alpha, c.l1);
    if c.class == SecondOrderClass::K0Tau {
        return Ok((1.0 - a) * s * c.second_value / ((c.p - 1.0) * (3.0 + s)));
    }
    let g = if c.class == SecondOrderClass::K01Tau { 0.0 } else { g_limit(c.theta, c.y)?.value };
    let num = s * ((1.0 - 0.5 * a) * c.second_value - l1) - c.b0 * (2.0 + s * l1) * g;
    let den = s * (3.0 + s + l1) - 0.5 * a * s * s * l1 * l1 + a * s * l1;
    Ok(num / den)
}

/// Inputs echoed into a prediction record. Absent fields skip the
/// corresponding constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionInputs {
    pub p: f64,
    pub alpha: f64,
    pub sigma: Option<f64>,
    pub power_q: Option<f64>,
    pub gamma: Option<f64>,
    pub b_at_r: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub c: Option<f64>,
    pub l1: Option<f64>,
    pub e_k: Option<f64>,
    pub l_star: Option<f64>,
    pub b0: Option<f64>,
    pub theta: Option<f64>,
    pub tau: Option<f64>,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub beta: Option<f64>,
    pub psi_r: Option<f64>,
    pub xi0: Option<f64>,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
    pub chi: Option<f64>,
    pub variant: Variant,
    pub inputs: PredictionInputs,
}

/// Evaluates every constant the inputs determine.
pub fn predict(inputs: &PredictionInputs, variant: Variant) -> Result<AsymptoticPrediction> {
    let i = inputs;
    let sigma = i.sigma.or(i.power_q.map(|q| q - 1.0));
    let (mut beta, mut psi_r) = (None, None);
    if let Some(q) = i.power_q.or(i.sigma.map(|s| s + 1.0)) {
        let one = predict_1d(i.p, i.alpha, q, i.gamma.unwrap_or(0.0), i.b_at_r.unwrap_or(1.0))?;
        beta = Some(one.beta);
        psi_r = Some(one.psi_r);
    }
    let (mut xi0, mut xi1, mut xi2, mut chi) = (None, None, None, None);
    if let (Some(s), Some(l1)) = (sigma, i.l1) {
        let c = i.c;
        let b1 = i.b1.or(c);
        let b2 = i.b2.or(c);
        if let (Some(b1), Some(b2)) = (b1, b2) {
            let fo = predict_first_order(i.p, i.alpha, s, l1, b1, b2, c, variant)?;
            xi0 = fo.xi0;
            xi1 = Some(fo.xi1);
            xi2 = Some(fo.xi2);
        }
        if i.p == 2.0 {
            let y = match (i.tau, i.zeta) {
                (Some(tau), _) => Some(YKind::LogTau { tau }),
                (None, Some(zeta)) => Some(YKind::PowerZeta { zeta }),
                _ => None,
            };
            if let Some(y) = y {
                let class = match (l1 == 0.0, y.is_log()) {
                    (true, true) => SecondOrderClass::K0Tau,
                    (true, false) => SecondOrderClass::K0Zeta,
                    (false, false) => SecondOrderClass::K01Zeta,
                    (false, true) => SecondOrderClass::K01Tau,
                };
                let second_value = if class == SecondOrderClass::K0Tau { i.l_star } else { i.e_k };
                if let Some(second_value) = second_value {
                    chi = Some(predict_chi(&ChiInputs {
                        p: i.p,
                        sigma: s,
                        alpha: i.alpha,
                        l1,
                        second_value,
                        b0: i.b0.unwrap_or(0.0),
                        theta: i.theta.unwrap_or(1.0),
                        y,
                        class,
                    })?);
                }
            }
        }
    }
    Ok(AsymptoticPrediction { beta, psi_r, xi0, xi1, xi2, chi, variant, inputs: i.clone() })
}

/// Exact fraction, for checks that must hold symbolically rather than to
/// rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0);
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Self { num: s * num / g, den: s * den / g }
    }

    /// Recovers `x` as a fraction with denominator at most `10⁶`, or fails
    /// if no such fraction reproduces it exactly.
    pub fn from_f64(x: f64) -> Result<Self> {
        let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
        let mut v = x;
        for _ in 0..40 {
            let a = v.floor();
            let ai = a as i128;
            let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
            if k2 > 1_000_000 {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            if h1 as f64 / k1 as f64 == x {
                return Ok(Self::new(h1, k1));
            }
            let frac = v - a;
            if frac == 0.0 {
                break;
            }
            v = 1.0 / frac;
        }
        Err(invalid("rational", "value is not a short fraction"))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::ops::Add for Rational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
}

impl std::ops::Sub for Rational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + Self::new(-o.num, o.den)
    }
}

impl std::ops::Mul for Rational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.num * o.num, self.den * o.den)
    }
}

impl std::ops::Div for Rational {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Self::new(self.num * o.den, self.den * o.num)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Outcome of comparing the `ξ` numerators against an independent constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjudication {
    Theorem,
    Proof,
    /// Both variants agree (e.g. `p = 2`), so the comparison cannot decide.
    InconclusiveByDesign,
    /// Both variants lie within the measurement error.
    Inconclusive,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub p: f64,
    pub alpha: f64,
    pub power_q: f64,
    /// The weight exponent `α/2 − α/p` that turns `b ≡ 1` into the class form.
    pub kernel_exponent: Rational,
    pub beta_one_dimensional: Rational,
    pub beta_composed: Rational,
    pub exponents_identical: bool,
    pub psi_r: f64,
    /// `ξ₀ φ(K(d)) d^β` for each variant.
    pub constant_theorem: f64,
    pub constant_proof: f64,
    pub constant_matched: f64,
    pub verdict: Adjudication,
}

/// For `f = u^q`, `b ≡ 1`, `k(t) = t^{α/2−α/p}`: compares the boundary
/// exponent of `ξ₀ φ(K(d))` with the one-dimensional `β` in exact
/// arithmetic, and its constant with `ψ(R)` for each numerator variant.
pub fn power_composition(p: f64, alpha: f64, power_q: f64) -> Result<CompositionReport> {
    let pr = Rational::from_f64(p)?;
    let ar = Rational::from_f64(alpha)?;
    let qr = Rational::from_f64(power_q)?;
    let one = Rational::new(1, 1);
    let half = Rational::new(1, 2);
    let e = qr + one - pr;
    if e.num <= 0 {
        return Err(Error::NoBlowUp { power_q, pm1: p - 1.0 });
    }
    let kappa = ar * half - ar / pr;
    // K(t) ∝ t^{1 + κ − α/2}; φ(t) ∝ t^{−p/e}.
    let k_exp = one + kappa - ar * half;
    let beta_composed = pr / e * k_exp;
    let beta_1d = (pr - ar) / e;

    let sigma = power_q - 1.0;
    let ef = e.to_f64();
    let l1 = 1.0 / k_exp.to_f64();
    let one_d = predict_1d(p, alpha, power_q, 0.0, 1.0)?;
    // φ(t) = A t^{−p/e} with A^e = ((σ+2)(p−1)/p)(p/e)^p; K(d) = d^{k}/k.
    let a = ((sigma + 2.0) * (p - 1.0) / p * (p / ef).powf(p)).powf(1.0 / ef);
    let kk = k_exp.to_f64();
    let shape = a * kk.powf(p / ef);
    let constant = |v| xi(p, alpha, sigma, l1, 1.0, v).map(|x| x * shape);
    let (ct, cp, cm) =
        (constant(Variant::TheoremNumerator2)?, constant(Variant::ProofNumeratorP)?, constant(Variant::Matched)?);
    let close = |c: f64| ((c - one_d.psi_r) / one_d.psi_r).abs() < 1e-12;
    let verdict = match (close(ct), close(cp)) {
        (true, true) => Adjudication::InconclusiveByDesign,
        (true, false) => Adjudication::Theorem,
        (false, true) => Adjudication::Proof,
        (false, false) => Adjudication::Neither,
    };
    Ok(CompositionReport {
        p,
        alpha,
        power_q,
        kernel_exponent: kappa,
        beta_one_dimensional: beta_1d,
        beta_composed,
        exponents_identical: beta_1d == beta_composed,
        psi_r: one_d.psi_r,
        constant_theorem: ct,
        constant_proof: cp,
        constant_matched: cm,
        verdict,
    })
}

/// Ingredients of the `I`-terms for `p = 2`.
#[derive(Debug, Clone)]
pub struct ITermConfig {
    pub kernel: KaramataSpec,
    pub transform: PhiTransform,
    pub y: YKind,
    pub b0: f64,
    pub theta: f64,
    /// Localisation slack `ε` of the `±` terms.
    pub epsilon: f64,
    pub l1: f64,
    pub second_value: f64,
    pub xi0: f64,
    pub chi: f64,
}

impl ITermConfig {
    /// Derives `l₁`, the second-order value, `ξ₀` and `χ` from the kernel.
    pub fn new(kernel: KaramataSpec, transform: PhiTransform, y: YKind, b0: f64, theta: f64) -> Result<Self> {
        if transform.p != 2.0 {
            return Err(invalid("p", "I-terms are defined for p = 2"));
        }
        let limits = kernel.estimate_limits()?;
        let (class, second_value) = kernel.second_order_with(limits.l1, y)?;
        let sigma = transform.nonlinearity.sigma;
        let alpha = kernel.alpha;
        let xi0 = xi(2.0, alpha, sigma, limits.l1, 1.0, Variant::TheoremNumerator2)?;
        let chi = predict_chi(&ChiInputs { p: 2.0, sigma, alpha, l1: limits.l1, second_value, b0, theta, y, class })?;
        Ok(Self { kernel, transform, y, b0, theta, epsilon: 0.0, l1: limits.l1, second_value, xi0, chi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ITerms {
    pub i1: f64,
    pub i2p: f64,
    pub i2m: f64,
    pub i3p: f64,
    pub i3m: f64,
    pub i4p: f64,
    pub i4m: f64,
}

impl ITerms {
    pub fn as_array(&self) -> [f64; 7] {
        [self.i1, self.i2p, self.i2m, self.i3p, self.i3m, self.i4p, self.i4m]
    }

    fn from_array(a: [f64; 7]) -> Self {
        Self { i1: a[0], i2p: a[1], i2m: a[2], i3p: a[3], i3m: a[4], i4p: a[5], i4m: a[6] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ITermSample {
    pub terms: ITerms,
    /// Some bracket lost more than about 10⁶ ulps to cancellation.
    pub cancellation_warning: bool,
}

/// Neumaier-compensated sum and its condition `Σ|t| / |Σt|`.
fn compensated(terms: &[f64]) -> (f64, f64) {
    let (mut s, mut c, mut abs) = (0.0f64, 0.0f64, 0.0f64);
    for &t in terms {
        let u = s + t;
        c += if s.abs() >= t.abs() { (s - u) + t } else { (t - u) + s };
        s = u;
        abs += t.abs();
    }
    let v = s + c;
    (v, if v == 0.0 { f64::INFINITY } else { abs / v.abs() })
}

const CANCELLATION_LIMIT: f64 = 1e6;

/// Evaluates the four bracketed expressions at `r`.
///
/// Readings adopted where the printed display is not self-consistent: the
/// `y''` term of `I₂` carries `(K/K')²`; the last term of `I₄` carries
/// `B₀ r^θ` and `φ f'(φ)/f(φ)`; the mean-value point is
/// `γ = ξ₀ φ (1 + χ y / 2)`.
pub fn evaluate_i_terms(cfg: &ITermConfig, r: f64) -> Result<ITermSample> {
    let kernel = &cfg.kernel;
    let nl = &cfg.transform.nonlinearity;
    let alpha = kernel.alpha;
    let big_k = kernel.big_k(r)?;
    let rho = kernel.kernel_ratio(r)?;
    let kk = kernel.curvature_ratio(r)?;
    let ko = r * rho;
    let u = cfg.transform.phi(big_k)?;
    let ln_f = nl.ln_f(u);
    // p = 2: φ' = −√(2F(φ)), φ'' = f(φ).
    let a = -((0.5 * (2f64.ln() + nl.ln_big_f(u)?)) - big_k.ln() - ln_f).exp();
    let bq = (u.ln() - 2.0 * big_k.ln() - ln_f).exp();
    let xi0 = cfg.xi0;
    let fr = nl.f_ratio(u, xi0) / xi0;
    let y = cfg.y.eval(r);
    let ly = cfg.y.log_derivative(r);
    let l2y = cfg.y.second_log_derivative(r);
    let rt = r.powf(cfg.theta);
    let chi = cfg.chi;
    let gamma = xi0 * u * (1.0 + 0.5 * chi * y);
    let fg = nl.f_prime(gamma) / nl.f_prime(u);
    let idx = nl.index(u);

    let mut warn = false;
    let mut bracket = |terms: &[f64]| {
        let (v, cond) = compensated(terms);
        warn |= cond > CANCELLATION_LIMIT;
        v
    };
    let i1 = bracket(&[1.0, a * kk, a * alpha * cfg.l1, -fr]) / y;
    let chi_bracket = bracket(&[1.0, a * kk, 2.0 * a * rho * ly, bq * rho * rho * l2y, -fg * idx]);
    let i3_bracket = bracket(&[rho, -cfg.l1]) / y;
    let i2 = |b: f64| -b * rt / y * fr + chi * chi_bracket;
    let i3 = alpha * (a * (i3_bracket + chi * rho) + chi * bq * rho * rho * ly);
    let i4 = |b: f64| a * ko * (1.0 / y + chi) + chi * bq * r * rho * rho * ly - chi * b * rt * fg * idx;
    let (bp, bm) = (cfg.b0 + cfg.epsilon, cfg.b0 - cfg.epsilon);
    Ok(ITermSample {
        terms: ITerms { i1, i2p: i2(bp), i2m: i2(bm), i3p: i3, i3m: i3, i4p: i4(bp), i4m: i4(bm) },
        cancellation_warning: warn,
    })
}

/// Target limits of the I-terms for the configured class.
pub fn i_term_targets(cfg: &ITermConfig) -> ITerms {
    let s = cfg.transform.nonlinearity.sigma;
    let (a, l1, ek, chi) = (cfg.kernel.alpha, cfg.l1, cfg.second_value, cfg.chi);
    let w = s / (2.0 + s);
    let i1 = w * ek;
    if cfg.y.is_log() {
        let i2 = chi * (1.0 - w * (1.0 - l1) - s);
        let i3 = -a * w * (ek + chi * l1);
        ITerms::from_array([i1, i2, i2, i3, i3, 0.0, 0.0])
    } else {
        let g = g_limit(cfg.theta, cfg.y).map(|g| g.value).unwrap_or(f64::NAN);
        let xs = (2.0 + l1 * (1.0 - a) * s) / (2.0 + s);
        let i2 = |b: f64| chi * (1.0 - w * (1.0 + l1) - s) - b * xs * g;
        let i3 = a * (-0.5 * w * ek + chi * (s * s * l1 * l1 / (2.0 * (2.0 + s)) - w * l1));
        let i4 = -w * l1;
        let (bp, bm) = (cfg.b0 + cfg.epsilon, cfg.b0 - cfg.epsilon);
        ITerms::from_array([i1, i2(bp), i2(bm), i3, i3, i4, i4])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITermReport {
    pub limits: ITerms,
    /// Gap between the last two extrapolants of each term.
    pub gaps: ITerms,
    pub targets: ITerms,
    pub cancellation_warning: bool,
}

/// Extrapolates every term to `r → 0⁺` on `r = 10^{−2−j/2}`, `j = 0..10`.
pub fn i_term_limits(cfg: &ITermConfig) -> Result<ITermReport> {
    let rs: Vec<f64> = (0..=10).map(|j| 10f64.powf(-2.0 - j as f64 / 2.0)).collect();
    let samples = rs.iter().map(|&r| evaluate_i_terms(cfg, r)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = if cfg.y.is_log() { rs.iter().map(|r| -1.0 / r.ln()).collect() } else { rs.clone() };
    let mut limits = [0.0; 7];
    let mut gaps = [0.0; 7];
    for k in 0..7 {
        let vs: Vec<f64> = samples.iter().map(|s| s.terms.as_array()[k]).collect();
        let l: Limit = richardson(&xs, &vs, 2);
        limits[k] = l.value;
        gaps[k] = l.gap();
    }
    Ok(ITermReport {
        limits: ITerms::from_array(limits),
        gaps: ITerms::from_array(gaps),
        targets: i_term_targets(cfg),
        cancellation_warning: samples.iter().any(|s| s.cancellation_warning),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_one_dimensional() {
        let o = predict_1d(2.0, 0.0, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(o.beta, 1.0);
        assert!((o.psi_r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rational_roundtrip() {
        assert_eq!(Rational::from_f64(-0.5).unwrap(), Rational::new(-1, 2));
        assert_eq!(Rational::from_f64(1.25).unwrap().to_string(), "5/4");
        assert!(Rational::from_f64(std::f64::consts::PI).is_err());
    }

    #[test]
    fn compensated_sum_tracks_condition() {
        let (v, cond) = compensated(&[1.0, 1e-17, -1.0]);
        assert_eq!(v, 1e-17);
        assert!(cond > 1e16);
    }
}
