//! Scenario files. Every table rejects unknown keys; [`ScenarioConfig::validate`]
//! checks the sections a command needs before anything is solved.

use anyhow::{bail, ensure, Context, Result};
use blowup_core::asymptotics::PredictionInputs;
use blowup_core::radial::default_schedule;
use blowup_core::rate_fit::{Tolerances, Window};
use blowup_core::{Coefficient, KaramataSpec, KernelKind, NonlinearitySpec, RadialProblem, SlowlyVarying, YKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    /// `theorem`, `proof` or `matched`; `--variant` takes precedence.
    pub variant: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fit: FitConfig,
    pub problem: Option<ProblemConfig>,
    /// Overrides of `problem`, solved independently and reported by key.
    #[serde(default, rename = "case")]
    pub cases: Vec<CaseConfig>,
    pub kernel: Option<KernelConfig>,
    pub second_order: Option<SecondOrderConfig>,
    pub predict: Option<PredictionInputs>,
    pub ko: Option<KoConfig>,
    pub adjudicate: Option<AdjudicateConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let w = Window::default();
        Self { d_min: w.d_min, d_max: w.d_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `(0, R)` with `ψ(0) = 0`.
    #[default]
    Interval,
    /// Ball of radius `R` in dimension `dimension`.
    Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub domain: Domain,
    #[serde(default = "one_usize")]
    pub dimension: usize,
    #[serde(default = "one")]
    pub radius: f64,
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
    /// Dirichlet data `k`; defaults to `2⁰, …, 2¹⁶`.
    pub schedule: Option<Vec<f64>>,
    /// Also fit `u / φ(K(d))` and judge it against `ξ₀`.
    #[serde(default = "yes")]
    pub verify_xi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub sigma: f64,
    /// `one`, `log1p`, `loglog` or `explog:a`.
    #[serde(default = "one_str")]
    pub slowly_varying: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant {
        #[serde(default = "one")]
        factor: f64,
    },
    DistancePower {
        #[serde(default = "one")]
        factor: f64,
        gamma: f64,
    },
    /// Built from the `[kernel]` table.
    Karamata {
        #[serde(default = "one")]
        factor: f64,
        #[serde(default)]
        b0: f64,
        #[serde(default = "one")]
        theta: f64,
    },
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self::Constant { factor: 1.0 }
    }
}

impl CoefficientConfig {
    pub fn factor(&self) -> f64 {
        match *self {
            Self::Constant { factor } | Self::DistancePower { factor, .. } | Self::Karamata { factor, .. } => factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub key: String,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Power,
    Log1pPower,
    Expm1Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelName,
    pub q: f64,
    /// Defaults to the problem's `α`, or 0 without a problem.
    pub alpha: Option<f64>,
    /// Scale function for the second-order limit.
    pub y: Option<YKind>,
}

impl KernelConfig {
    pub fn spec(&self, alpha: f64) -> blowup_core::Result<KaramataSpec> {
        let q = self.q;
        let kind = match self.kind {
            KernelName::Power => KernelKind::Power { q },
            KernelName::Log1pPower => KernelKind::Log1pPower { q },
            KernelName::Expm1Power => KernelKind::Expm1Power { q },
        };
        KaramataSpec::new(kind, self.alpha.unwrap_or(alpha))
    }

    /// `(1 + q − α/2)⁻¹`, shared by the three analytic kernels.
    pub fn l1_closed_form(&self, alpha: f64) -> f64 {
        1.0 / (1.0 + self.q - 0.5 * self.alpha.unwrap_or(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondOrderConfig {
    pub y: YKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoConfig {
    pub p: Vec<f64>,
    /// `f(u) = u^q L(u)`.
    pub q: Vec<f64>,
    #[serde(default = "one_str")]
    pub slowly_varying: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjudicateConfig {
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Defaults to `p`, i.e. `f = u^{p+1}`.
    pub sigma: Option<f64>,
    pub kernel_q: Option<f64>,
    /// Also measure `ξ̂` on the anchored interval for every case.
    #[serde(default = "yes")]
    pub measure: bool,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn one_str() -> String {
    "one".into()
}

/// A case with every override applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCase {
    pub key: String,
    pub p: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
        let cfg = Self::parse(text).with_context(|| format!("invalid scenario {}", path.display()))?;
        Ok((cfg, bytes))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn window(&self) -> Result<Window> {
        Window::new(self.fit.d_min, self.fit.d_max).context("[fit]")
    }

    /// Applies `key=value[,key=value…]` to the tolerances.
    pub fn override_tolerances(&mut self, spec: &str) -> Result<()> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').with_context(|| format!("tolerance override `{item}` is not key=value"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("tolerance `{k}`"))?;
            ensure!(v > 0.0 && v.is_finite(), "tolerance `{k}` must be positive");
            let t = &mut self.tolerances;
            match k.trim() {
                "exponent" => t.exponent = v,
                "constant" => t.constant = v,
                "second_order" => t.second_order = v,
                "limit" => t.limit = v,
                other => bail!("unknown tolerance `{other}` (expected exponent, constant, second_order, limit)"),
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<&ProblemConfig> {
        self.problem.as_ref().context("missing [problem] table")
    }

    pub fn kernel(&self) -> Result<&KernelConfig> {
        self.kernel.as_ref().context("missing [kernel] table")
    }

    /// The base problem alone, or every `[[case]]` sorted by key.
    pub fn resolved_cases(&self) -> Result<Vec<ResolvedCase>> {
        let base = self.problem()?;
        let resolve = |c: &CaseConfig| ResolvedCase {
            key: c.key.clone(),
            p: c.p.unwrap_or(base.p),
            alpha: c.alpha.unwrap_or(base.alpha),
            sigma: c.sigma.unwrap_or(base.nonlinearity.sigma),
        };
        if self.cases.is_empty() {
            return Ok(vec![resolve(&CaseConfig { key: self.name.clone(), p: None, alpha: None, sigma: None })]);
        }
        let mut cases: Vec<ResolvedCase> = self.cases.iter().map(resolve).collect();
        cases.sort_by(|a, b| a.key.cmp(&b.key));
        if let Some(w) = cases.windows(2).find(|w| w[0].key == w[1].key) {
            bail!("duplicate case key `{}`", w[0].key);
        }
        Ok(cases)
    }

    pub fn nonlinearity(&self, sigma: f64) -> Result<NonlinearitySpec> {
        let l = SlowlyVarying::parse(&self.problem()?.nonlinearity.slowly_varying)?;
        Ok(NonlinearitySpec::new(sigma, l))
    }

    pub fn build_problem(&self, case: &ResolvedCase) -> Result<RadialProblem> {
        let pc = self.problem()?;
        let nl = self.nonlinearity(case.sigma)?;
        let mut pr = match pc.domain {
            Domain::Interval => RadialProblem::interval(pc.radius, case.p, case.alpha, nl)?,
            Domain::Ball => RadialProblem::new(pc.dimension, pc.radius, case.p, case.alpha, nl)?,
        };
        pr = pr.with_coefficient(match pc.coefficient {
            CoefficientConfig::Constant { factor } => Coefficient::constant(factor),
            CoefficientConfig::DistancePower { factor, gamma } => Coefficient::distance_power(factor, gamma),
            CoefficientConfig::Karamata { factor, b0, theta } => {
                Coefficient::karamata(factor, self.kernel()?.spec(case.alpha)?, case.p, b0, theta)
            }
        });
        pr.validate()?;
        Ok(pr)
    }

    pub fn schedule(&self) -> Vec<f64> {
        self.problem.as_ref().and_then(|p| p.schedule.clone()).unwrap_or_else(default_schedule)
    }

    /// Structural checks for `command`, run before any computation.
    pub fn validate(&self, command: crate::Command) -> Result<()> {
        use crate::Command::*;
        self.window()?;
        for (name, t) in [
            ("exponent", self.tolerances.exponent),
            ("constant", self.tolerances.constant),
            ("second_order", self.tolerances.second_order),
            ("limit", self.tolerances.limit),
        ] {
            ensure!(t > 0.0 && t.is_finite(), "[tolerances] {name} must be positive");
        }
        if let Some(v) = &self.variant {
            blowup_core::Variant::parse(v)?;
        }
        let needs_problem = matches!(command, Solve | VerifySecondOrder)
            || (command == VerifyFirstOrder && self.adjudicate.is_none());
        if needs_problem || self.problem.is_some() {
            let pc = self.problem()?;
            ensure!(pc.domain == Domain::Ball || pc.dimension == 1, "[problem] dimension must be 1 for an interval");
            if command != Predict {
                for c in self.resolved_cases()? {
                    self.build_problem(&c).with_context(|| format!("case `{}`", c.key))?;
                }
            }
        }
        match command {
            Predict => {
                self.predict.as_ref().context("missing [predict] table")?;
            }
            VerifySecondOrder => {
                self.second_order.as_ref().context("missing [second_order] table")?;
                let pc = self.problem()?;
                ensure!(
                    matches!(pc.coefficient, CoefficientConfig::Karamata { .. }),
                    "[problem.coefficient] kind must be karamata for second-order verification"
                );
                ensure!(pc.p == 2.0 && self.cases.is_empty(), "second-order verification needs a single p = 2 problem");
            }
            KaramataProbe => {
                self.kernel()?.spec(self.problem.as_ref().map_or(0.0, |p| p.alpha))?.validate()?;
            }
            KoCheck => {
                let ko = self.ko.as_ref().context("missing [ko] table")?;
                ensure!(!ko.p.is_empty() && !ko.q.is_empty(), "[ko] p and q must be nonempty");
                ensure!(ko.p.iter().all(|&p| p > 1.0), "[ko] every p must exceed 1");
                SlowlyVarying::parse(&ko.slowly_varying)?;
            }
            Adjudicate => {
                self.adjudicate.as_ref().context("missing [adjudicate] table")?;
            }
            Solve | VerifyFirstOrder => {}
        }
        if let Some(a) = &self.adjudicate {
            ensure!(!a.p.is_empty() && !a.alpha.is_empty(), "[adjudicate] p and alpha must be nonempty");
            ensure!(a.p.iter().all(|&p| p > 1.0), "[adjudicate] every p must exceed 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Command;

    const BASE: &str = "name = \"t\"\n[problem]\np = 2.0\nnonlinearity = { sigma = 2.0 }\n";

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ScenarioConfig::parse(&format!("{BASE}radius_typo = 3\n")).unwrap_err().to_string();
        assert!(err.contains("radius_typo"), "{err}");
        assert!(err.contains("line 5"), "{err}");
        assert!(ScenarioConfig::parse("name = \"t\"\n[tolerances]\nexponents = 0.1\n").is_err());
        let coeff = format!("{BASE}coefficient = {{ kind = \"constant\", gamma = 1.0 }}\n");
        assert!(ScenarioConfig::parse(&coeff).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(BASE).unwrap();
        let p = c.problem.as_ref().unwrap();
        assert_eq!((p.domain, p.dimension, p.radius, p.alpha), (Domain::Interval, 1, 1.0, 0.0));
        assert_eq!(p.coefficient, CoefficientConfig::Constant { factor: 1.0 });
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.schedule().len(), 17);
        c.validate(Command::VerifyFirstOrder).unwrap();
    }

    #[test]
    fn tolerance_overrides() {
        let mut c = ScenarioConfig::parse(BASE).unwrap();
        c.override_tolerances("exponent=0.01, second_order=0.3").unwrap();
        assert_eq!((c.tolerances.exponent, c.tolerances.second_order), (0.01, 0.3));
        assert!(c.override_tolerances("slope=1").is_err());
        assert!(c.override_tolerances("constant=-1").is_err());
        assert!(c.override_tolerances("constant").is_err());
    }

    #[test]
    fn cases_sort_by_key_and_reject_duplicates() {
        let text = format!("{BASE}[[case]]\nkey = \"b\"\np = 3.0\n[[case]]\nkey = \"a\"\nalpha = 0.5\n");
        let cases = ScenarioConfig::parse(&text).unwrap().resolved_cases().unwrap();
        assert_eq!(cases[0], ResolvedCase { key: "a".into(), p: 2.0, alpha: 0.5, sigma: 2.0 });
        assert_eq!(cases[1].p, 3.0);
        let dup = format!("{BASE}[[case]]\nkey = \"a\"\n[[case]]\nkey = \"a\"\n");
        assert!(ScenarioConfig::parse(&dup).unwrap().resolved_cases().is_err());
    }

    #[test]
    fn validation_names_the_missing_section() {
        let c = ScenarioConfig::parse("name = \"t\"\n").unwrap();
        for (cmd, table) in [
            (Command::Predict, "[predict]"),
            (Command::KoCheck, "[ko]"),
            (Command::Adjudicate, "[adjudicate]"),
            (Command::KaramataProbe, "[kernel]"),
            (Command::Solve, "[problem]"),
        ] {
            let err = format!("{:#}", c.validate(cmd).unwrap_err());
            assert!(err.contains(table), "{cmd:?}: {err}");
        }
        let bad_p = ScenarioConfig::parse("name = \"t\"\n[problem]\np = 0.5\nnonlinearity = { sigma = 2.0 }\n").unwrap();
        assert!(bad_p.validate(Command::Solve).is_err());
        let second = ScenarioConfig::parse(BASE).unwrap();
        assert!(format!("{:#}", second.validate(Command::VerifySecondOrder).unwrap_err()).contains("[second_order]"));
    }
}
