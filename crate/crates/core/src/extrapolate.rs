//! Sequence acceleration: polynomial (Richardson/Neville) extrapolation to a
//! zero abscissa and iterated Aitken Δ².

use serde::{Deserialize, Serialize};

/// An extrapolated limit together with the preceding extrapolant, which
/// serves as the error proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limit {
    pub value: f64,
    pub previous: f64,
}

impl Limit {
    pub fn gap(&self) -> f64 {
        (self.value - self.previous).abs()
    }

    /// `|value − previous| ≤ rel·max(1, |value|)`.
    pub fn converged(&self, rel: f64) -> bool {
        self.gap() <= rel * self.value.abs().max(1.0)
    }
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Polynomial extrapolation of order `order` using the last `order + 1`
/// samples; `previous` uses the window shifted one sample back.
pub fn richardson(xs: &[f64], ys: &[f64], order: usize) -> Limit {
    let n = xs.len();
    assert!(n >= order + 2, "need at least order + 2 samples");
    let w = order + 1;
    let value = neville_at_zero(&xs[n - w..], &ys[n - w..]);
    let previous = neville_at_zero(&xs[n - w - 1..n - 1], &ys[n - w - 1..n - 1]);
    Limit { value, previous }
}

/// One Aitken Δ² step; `None` when the second difference vanishes
/// relative to the data.
pub fn aitken(s0: f64, s1: f64, s2: f64) -> Option<f64> {
    let d1 = s1 - s0;
    let d2 = s2 - s1;
    let den = d2 - d1;
    let scale = s0.abs().max(s1.abs()).max(s2.abs());
    if den.abs() <= 64.0 * f64::EPSILON * scale || !den.is_finite() {
        return None;
    }
    Some(s2 - d2 * d2 / den)
}

/// Applies Aitken Δ² once across a sequence. Positions where the step is
/// undefined carry the raw term forward.
pub fn aitken_sweep(seq: &[f64]) -> Vec<f64> {
    seq.windows(3).map(|w| aitken(w[0], w[1], w[2]).unwrap_or(w[2])).collect()
}

/// Iterated Aitken: sweeps while at least three terms remain, at most
/// `depth` times, and returns the last two entries of the deepest sweep.
pub fn aitken_limit(seq: &[f64], depth: usize) -> Limit {
    assert!(seq.len() >= 2);
    let mut cur = seq.to_vec();
    for _ in 0..depth {
        if cur.len() < 4 {
            break;
        }
        let next = aitken_sweep(&cur);
        cur = next;
    }
    let n = cur.len();
    Limit { value: cur[n - 1], previous: cur[n - 2] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomial_intercept() {
        let xs = [0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x - x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn aitken_is_exact_on_geometric_error() {
        let seq: Vec<f64> = (0..6).map(|j| 1.5 + 0.7 * 0.6f64.powi(j)).collect();
        let l = aitken_limit(&seq, 1);
        assert!((l.value - 1.5).abs() < 1e-13);
    }

    #[test]
    fn iterated_aitken_handles_two_rates() {
        let seq: Vec<f64> = (0..10)
            .map(|j| 2.0 + 0.5f64.powi(j) - 0.3 * 0.25f64.powi(j))
            .collect();
        let l = aitken_limit(&seq, 2);
        assert!((l.value - 2.0).abs() < 1e-6, "{}", l.value);
    }

    #[test]
    fn constant_sequence_passes_through() {
        let l = aitken_limit(&[4.0; 6], 2);
        assert_eq!(l.value, 4.0);
        assert!(l.converged(1e-15));
    }
}
