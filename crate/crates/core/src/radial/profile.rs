use super::shoot::Node;
use super::{LeftCondition, RadialProblem};
use crate::interp::Pchip;
use crate::tolerances::ORDER_SLACK;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub left: LeftCondition,
    /// `ψ(0)` for the ball, `ψ'(0)` for the anchored interval.
    pub shooting_parameter: f64,
    /// `ψ(R)` for profiles that stay finite.
    pub boundary_value: Option<f64>,
    pub blow_up: bool,
    pub blow_up_radius: Option<f64>,
    /// Relative first-integral residual at the nodes, when computed.
    pub residual: Option<f64>,
    pub grading: f64,
    pub steps: usize,
    /// Dirichlet data the profile was solved for.
    pub dirichlet_target: Option<f64>,
    /// Relative interior change of the final extrapolation step of the
    /// Dirichlet schedule.
    pub saturation_gap: Option<f64>,
    /// Largest relative interior gap between the schedule limit and the
    /// critical shot.
    pub limit_mismatch: Option<f64>,
    /// Largest relative decrease between successive schedule members.
    pub monotonicity_violation: Option<f64>,
}

impl Default for ProfileMeta {
    fn default() -> Self {
        Self {
            left: LeftCondition::Symmetric,
            shooting_parameter: 0.0,
            boundary_value: None,
            blow_up: false,
            blow_up_radius: None,
            residual: None,
            grading: 0.9,
            steps: 0,
            dirichlet_target: None,
            saturation_gap: None,
            limit_mismatch: None,
            monotonicity_violation: None,
        }
    }
}

/// Values on the boundary-graded grid. `d = R − r` is stored separately so
/// that distances near the boundary keep full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub r: Vec<f64>,
    pub d: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `r^{N−1} w Φ_p(ψ')`.
    pub flux: Vec<f64>,
    pub meta: ProfileMeta,
}

impl SolutionProfile {
    pub(crate) fn from_nodes(nodes: &[Node], meta: ProfileMeta) -> Self {
        Self {
            r: nodes.iter().map(|n| n.r).collect(),
            d: nodes.iter().map(|n| n.d).collect(),
            u: nodes.iter().map(|n| n.u).collect(),
            du: nodes.iter().map(|n| n.du).collect(),
            flux: nodes.iter().map(|n| n.flux).collect(),
            meta,
        }
    }

    /// Builds a profile from distances and values, e.g. for synthetic data.
    pub fn from_distances(radius: f64, d: Vec<f64>, u: Vec<f64>) -> Self {
        let n = d.len();
        Self {
            r: d.iter().map(|d| radius - d).collect(),
            d,
            u,
            du: vec![f64::NAN; n],
            flux: vec![f64::NAN; n],
            meta: ProfileMeta { blow_up: true, ..ProfileMeta::default() },
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn finest_distance(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Indices of nodes in the interior half `r ≤ R/2`.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.d[i] >= self.r[i]).collect()
    }

    /// Monotone cubic interpolation of `u` in `ln d`.
    pub fn value_at_distance(&self, d: f64) -> f64 {
        let mut xs: Vec<f64> = self.d.iter().map(|d| d.ln()).collect();
        let mut ys = self.u.clone();
        xs.reverse();
        ys.reverse();
        Pchip::new(xs, ys).eval(d.ln())
    }

    /// `(w Φ_p(ψ'))' / (b f(ψ))` at interior nodes `r > 0`; lies in
    /// `[1/N, 1]` for increasing solutions.
    pub fn flux_ratios(&self, problem: &RadialProblem) -> Vec<f64> {
        let n = problem.dimension as f64;
        (0..self.len())
            .filter(|&i| self.r[i] > 0.0 && self.u[i] > 0.0)
            .map(|i| {
                let (r, d) = (self.r[i], self.d[i]);
                let bf = problem.coefficient.value(r, d) * problem.nonlinearity.f(self.u[i]);
                1.0 - (n - 1.0) * self.flux[i] / (r.powf(n) * bf)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ordered: bool,
    /// Largest `(sub − sup)/max(1, |sup|)`, clipped at 0.
    pub max_violation: f64,
}

/// Checks `sub ≤ sup` pointwise on `sup`'s grid, resampling `sub` by
/// monotone interpolation in `ln d` where the grids differ.
pub fn comparison_check(sub: &SolutionProfile, sup: &SolutionProfile) -> Comparison {
    let same_grid = sub.d == sup.d;
    let (lo, hi) = (sub.finest_distance(), sub.d.iter().copied().fold(0.0, f64::max));
    let mut worst: f64 = 0.0;
    for i in 0..sup.len() {
        let d = sup.d[i];
        let s = if same_grid {
            sub.u[i]
        } else if d >= lo && d <= hi {
            sub.value_at_distance(d)
        } else {
            continue;
        };
        worst = worst.max((s - sup.u[i]) / sup.u[i].abs().max(1.0));
    }
    Comparison { ordered: worst <= ORDER_SLACK, max_violation: worst }
}
