use super::profile::{ProfileMeta, SolutionProfile};
use super::{LeftCondition, RadialProblem};
use crate::error::{invalid, Result};
use crate::ode::{Dopri5, Halt};

/// Result of a single initial-value integration.
#[derive(Debug, Clone)]
pub struct Shot {
    pub profile: SolutionProfile,
    /// Radius where `ψ → ∞`, if that happens before `R`.
    pub blow_up_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub r: f64,
    pub d: f64,
    pub u: f64,
    pub du: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Fate {
    /// Reached the boundary with finite `ψ(R)`.
    Finite(f64),
    /// Blew up at distance `ρ` from the boundary.
    BlowUp(f64),
}

pub(crate) struct Run {
    pub nodes: Vec<Node>,
    pub fate: Fate,
    pub steps: usize,
    pub residual: Option<f64>,
}

/// Accepted steps, kept for the independent first-integral check.
#[derive(Default)]
struct Trace {
    /// `(r, ψ, ψ', J)` in the centre phase.
    inner: Vec<[f64; 4]>,
    /// `(η, ln ψ, d ln ψ/dη, J)` in the boundary phase.
    outer: Vec<[f64; 4]>,
    /// `(which phase, index)` of every grid node after the first.
    marks: Vec<(bool, usize)>,
}

const GL3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * m1
}

impl RadialProblem {
    fn solver(&self) -> Dopri5 {
        Dopri5 { rtol: self.options.rtol, atol: self.options.atol, ..Dopri5::default() }
    }

    fn phi_p_inv(&self, z: f64) -> f64 {
        z.signum() * z.abs().powf(1.0 / (self.p - 1.0))
    }

    fn source(&self, r: f64, d: f64, u: f64) -> f64 {
        let rn = r.powi(self.dimension as i32 - 1);
        rn * self.coefficient.value(r, d) * self.nonlinearity.f(u.max(0.0))
    }

    /// `ψ'` from the flux in the centre phase.
    fn slope(&self, r: f64, j: f64) -> f64 {
        let d = self.radius - r;
        let rn = r.powi(self.dimension as i32 - 1);
        self.phi_p_inv(j / (rn * self.weight.ln_w(self.alpha, r, d).exp()))
    }

    fn outer_rhs(&self, eta: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        let rho = eta.exp();
        let r = self.radius - rho;
        let n1 = (self.dimension - 1) as f64;
        let ln_r = if n1 > 0.0 { r.ln() } else { 0.0 };
        let ln_w = self.weight.ln_w(self.alpha, r, rho);
        let ln_dpsi = (y[1] - n1 * ln_r - ln_w) / (self.p - 1.0);
        let ln_f = self.nonlinearity.ln_f(y[0].exp());
        let ln_b = self.coefficient.ln_value(r, rho);
        let d0 = -(eta + ln_dpsi - y[0]).exp();
        let d1 = -(eta + n1 * ln_r + ln_b + ln_f - y[1]).exp();
        (d0.is_finite() && d1.is_finite()).then_some([d0, d1])
    }

    fn zero_run(&self) -> Run {
        let nodes = self
            .grid_distances()
            .iter()
            .map(|&d| Node { r: self.radius - d, d, u: 0.0, du: 0.0, flux: 0.0 })
            .collect();
        Run { nodes, fate: Fate::Finite(0.0), steps: 0, residual: Some(0.0) }
    }

    /// Integrates from the centre with shooting parameter `x` (`ψ(0)` or
    /// `ψ'(0)` according to the left condition).
    pub(crate) fn integrate(&self, x: f64, record: bool) -> Result<Run> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(invalid("shooting parameter", "must be finite and nonnegative"));
        }
        if x == 0.0 && self.nonlinearity.f(0.0) == 0.0 {
            return Ok(self.zero_run());
        }
        let big_r = self.radius;
        let n = self.dimension as i32;
        let ds = self.grid_distances();
        let js = self.switch_index();
        let solver = self.solver();
        let threshold = self.options.blow_up_threshold;
        let mut trace = Trace::default();
        let mut nodes = Vec::with_capacity(ds.len());
        let mut steps = 0;

        // Centre phase in r with state (ψ, J).
        let (r0, mut y) = match self.left {
            LeftCondition::Symmetric => {
                let r0 = self.options.start * big_r;
                let j0 = self.source(r0, big_r - r0, x) * r0 / n as f64;
                let e1 = (1.0 - self.weight.center_exponent(self.alpha)) / (self.p - 1.0);
                let dpsi = self.slope(r0, j0);
                nodes.push(Node { r: 0.0, d: big_r, u: x, du: 0.0, flux: 0.0 });
                (r0, [x + dpsi * r0 / (e1 + 1.0), j0])
            }
            LeftCondition::Anchored => {
                let w0 = self.weight.ln_w(self.alpha, 0.0, big_r).exp();
                let j0 = w0 * x.powf(self.p - 1.0);
                nodes.push(Node { r: 0.0, d: big_r, u: 0.0, du: x, flux: j0 });
                (0.0, [0.0, j0])
            }
        };
        if record {
            trace.inner.push([r0, y[0], self.slope(r0, y[1]), y[1]]);
        }
        let rhs = |r: f64, s: &[f64; 2]| -> Option<[f64; 2]> {
            let dpsi = self.slope(r, s[1]);
            let dj = self.source(r, big_r - r, s[0]);
            (dpsi.is_finite() && dj.is_finite()).then_some([dpsi, dj])
        };
        let mut r = r0;
        let mut h = 0.0;
        for &d in &ds[1..=js] {
            let target = big_r - d;
            let adv = solver.advance(rhs, r, y, target, big_r, &mut h, |t, s, ds| {
                if record {
                    trace.inner.push([t, s[0], ds[0], s[1]]);
                }
                s[0] <= threshold
            });
            steps += adv.steps;
            r = adv.t;
            y = adv.y;
            if adv.halt != Halt::Reached {
                return Ok(Run { nodes, fate: Fate::BlowUp(big_r - r), steps, residual: None });
            }
            if record {
                trace.marks.push((false, trace.inner.len() - 1));
            }
            nodes.push(Node { r, d, u: y[0], du: self.slope(r, y[1]), flux: y[1] });
        }

        // Boundary phase in η = ln(R − r) with state (ln ψ, ln J).
        let mut eta = ds[js].ln();
        let mut z = [y[0].ln(), y[1].ln()];
        let ln_threshold = threshold.ln();
        let mut h = 0.0;
        let outer = |e: f64, s: &[f64; 2]| self.outer_rhs(e, s);
        if record {
            let d0 = self.outer_rhs(eta, &z).map_or(0.0, |v| v[0]);
            trace.outer.push([eta, z[0], d0, y[1]]);
        }
        let targets: Vec<(f64, bool)> = ds[js + 1..]
            .iter()
            .map(|d| (d.ln(), true))
            .chain(std::iter::once(((self.options.floor * big_r).ln(), false)))
            .collect();
        for (target, is_node) in targets {
            let adv = solver.advance(outer, eta, z, target, 1.0, &mut h, |t, s, ds| {
                if record && is_node {
                    trace.outer.push([t, s[0], ds[0], s[1].exp()]);
                }
                s[0] <= ln_threshold
            });
            steps += adv.steps;
            eta = adv.t;
            z = adv.y;
            if adv.halt != Halt::Reached {
                return Ok(Run { nodes, fate: Fate::BlowUp(eta.exp()), steps, residual: None });
            }
            if is_node {
                if record {
                    trace.marks.push((true, trace.outer.len() - 1));
                }
                let rho = eta.exp();
                let r = big_r - rho;
                nodes.push(Node { r, d: rho, u: z[0].exp(), du: self.slope_outer(r, rho, z[1]), flux: z[1].exp() });
            }
        }
        let rho = eta.exp();
        let r = big_r - rho;
        let a = self.weight.boundary_exponent(self.alpha) / (self.p - 1.0);
        let tail = self.slope_outer(r, rho, z[1]) * rho / (1.0 - a);
        let residual = record.then(|| self.first_integral_residual(&trace, &nodes));
        Ok(Run { nodes, fate: Fate::Finite(z[0].exp() + tail), steps, residual })
    }

    fn slope_outer(&self, r: f64, rho: f64, ln_j: f64) -> f64 {
        let n1 = (self.dimension - 1) as f64;
        let ln_r = if n1 > 0.0 { r.ln() } else { 0.0 };
        ((ln_j - n1 * ln_r - self.weight.ln_w(self.alpha, r, rho)) / (self.p - 1.0)).exp()
    }

    /// Largest relative gap between the carried flux `J` and
    /// `J(r₀) + ∫ s^{N−1} b f(ψ) ds` rebuilt from the recorded `ψ` alone.
    fn first_integral_residual(&self, trace: &Trace, nodes: &[Node]) -> f64 {
        let big_r = self.radius;
        let mut acc = trace.inner.first().map_or(0.0, |s| s[3]);
        let mut rebuilt_inner = vec![acc];
        for w in trace.inner.windows(2) {
            let ([r0, u0, m0, _], [r1, u1, m1, _]) = (w[0], w[1]);
            let half = 0.5 * (r1 - r0);
            for (x, wt) in GL3 {
                let r = r0 + half * (1.0 + x);
                acc += wt * half * self.source(r, big_r - r, hermite(r0, r1, u0, u1, m0, m1, r));
            }
            rebuilt_inner.push(acc);
        }
        let mut rebuilt_outer = vec![acc];
        for w in trace.outer.windows(2) {
            let ([e0, l0, m0, _], [e1, l1, m1, _]) = (w[0], w[1]);
            let half = 0.5 * (e1 - e0);
            for (x, wt) in GL3 {
                let e = e0 + half * (1.0 + x);
                let rho = e.exp();
                let u = hermite(e0, e1, l0, l1, m0, m1, e).exp();
                acc -= wt * half * rho * self.source(big_r - rho, rho, u);
            }
            rebuilt_outer.push(acc);
        }
        let mut worst: f64 = 0.0;
        for (&(outer, i), node) in trace.marks.iter().zip(&nodes[1..]) {
            let rebuilt = if outer { rebuilt_outer[i] } else { rebuilt_inner[i] };
            if node.flux > 0.0 && rebuilt.is_finite() {
                worst = worst.max((rebuilt - node.flux).abs() / node.flux);
            }
        }
        worst
    }

    pub(crate) fn run_to_profile(&self, x: f64, run: Run) -> SolutionProfile {
        let (boundary_value, blow_up_radius) = match run.fate {
            Fate::Finite(v) => (Some(v), None),
            Fate::BlowUp(rho) => (None, Some(self.radius - rho)),
        };
        let meta = ProfileMeta {
            left: self.left,
            shooting_parameter: x,
            boundary_value,
            blow_up: blow_up_radius.is_some(),
            blow_up_radius,
            residual: run.residual,
            grading: self.options.grading,
            steps: run.steps,
            ..ProfileMeta::default()
        };
        SolutionProfile::from_nodes(&run.nodes, meta)
    }

    /// Integrates the initial-value problem from the centre.
    pub fn shoot(&self, x: f64) -> Result<Shot> {
        let run = self.integrate(x, true)?;
        let profile = self.run_to_profile(x, run);
        Ok(Shot { blow_up_radius: profile.meta.blow_up_radius, profile })
    }

    /// Blow-up radius only; `None` when `ψ` stays finite up to `R`.
    pub fn blow_up_radius(&self, x: f64) -> Result<Option<f64>> {
        Ok(match self.integrate(x, false)?.fate {
            Fate::BlowUp(rho) => Some(self.radius - rho),
            Fate::Finite(_) => None,
        })
    }
}
