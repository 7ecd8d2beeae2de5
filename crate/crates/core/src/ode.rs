//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.
//!
//! The right-hand side may refuse a stage by returning `None` (for example
//! when a stage leaves the physical domain); the step is then rejected and
//! retried with a quarter of the size.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible |h| relative to `max(|t|, scale)`.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, min_step: 1e-14, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Halt {
    /// Reached the requested end point.
    Reached,
    /// The observer asked to stop after an accepted step.
    Stopped,
    /// Step size fell below the floor; the state is the last accepted one.
    Underflow,
    /// Step budget exhausted.
    Budget,
}

#[derive(Debug, Clone, Copy)]
pub struct Advance<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub halt: Halt,
    pub steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl Dopri5 {
    /// Advances from `(t, y)` to `t_end` (either direction). `h` carries the
    /// step-size guess in and the last successful proposal out. After every
    /// accepted step `observe(t, y, dy)` may return `false` to stop.
    #[allow(clippy::too_many_arguments)]
    pub fn advance<const N: usize, F, O>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        scale: f64,
        h: &mut f64,
        mut observe: O,
    ) -> Advance<N>
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
        O: FnMut(f64, &[f64; N], &[f64; N]) -> bool,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0;
        let mut steps = 0;
        let Some(mut k1) = rhs(t, &y) else {
            return Advance { t, y, halt: Halt::Underflow, steps };
        };
        if *h == 0.0 || !h.is_finite() {
            *h = 1e-3 * (t_end - t0).abs().max(scale * 1e-6);
        }
        let mut hh = h.abs() * dir;
        let mut rejected_last = false;
        loop {
            let remaining = t_end - t;
            if remaining * dir <= 0.0 {
                return Advance { t, y, halt: Halt::Reached, steps };
            }
            let floor = self.min_step * t.abs().max(scale);
            let last = (hh.abs() >= remaining.abs()) || (remaining.abs() - hh.abs()) < floor;
            if last {
                hh = remaining;
            }
            if steps >= self.max_steps {
                return Advance { t, y, halt: Halt::Budget, steps };
            }
            let stage = (|| {
                let k2 = rhs(t + C2 * hh, &axpy(&y, hh, &[(A21, &k1)]))?;
                let k3 = rhs(t + C3 * hh, &axpy(&y, hh, &[(A31, &k1), (A32, &k2)]))?;
                let k4 = rhs(t + C4 * hh, &axpy(&y, hh, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
                let k5 = rhs(
                    t + C5 * hh,
                    &axpy(&y, hh, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
                )?;
                let k6 = rhs(
                    t + hh,
                    &axpy(&y, hh, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
                )?;
                let y1 = axpy(&y, hh, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
                let k7 = rhs(t + hh, &y1)?;
                let mut err = 0.0;
                for i in 0..N {
                    let e = hh
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                    let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                    err += (e / sc) * (e / sc);
                }
                let err = (err / N as f64).sqrt();
                if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                Some((y1, k7, err))
            })();
            match stage {
                Some((y1, k7, err)) if err <= 1.0 => {
                    t = if last { t_end } else { t + hh };
                    y = y1;
                    k1 = k7;
                    steps += 1;
                    let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                    fac = fac.clamp(0.2, 5.0);
                    if rejected_last {
                        fac = fac.min(1.0);
                    }
                    rejected_last = false;
                    if !last || hh.abs() > h.abs() {
                        *h = (hh * fac).abs();
                    }
                    hh *= fac;
                    if !observe(t, &y, &k1) {
                        return Advance { t, y, halt: Halt::Stopped, steps };
                    }
                    if last {
                        return Advance { t, y, halt: Halt::Reached, steps };
                    }
                }
                Some((_, _, err)) => {
                    rejected_last = true;
                    hh *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                None => {
                    rejected_last = true;
                    hh *= 0.25;
                }
            }
            if hh.abs() < self.min_step * t.abs().max(scale) {
                return Advance { t, y, halt: Halt::Underflow, steps };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let solver = Dopri5::default();
        let mut h = 0.0;
        let out = solver.advance(|_, y| Some([-y[0]]), 0.0, [1.0], 5.0, 1.0, &mut h, |_, _, _| true);
        assert_eq!(out.halt, Halt::Reached);
        assert_eq!(out.t, 5.0);
        assert!((out.y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let solver = Dopri5::default();
        let mut h = 0.0;
        let out = solver.advance(
            |_, y| Some([y[1], -y[0]]),
            0.0,
            [0.0, 1.0],
            -3.0,
            1.0,
            &mut h,
            |_, _, _| true,
        );
        assert!((out.y[0] - (-3.0f64).sin()).abs() < 1e-11);
    }

    #[test]
    fn refused_stage_shrinks_step() {
        // y' = 1 with the domain y < 1: the solver must stop short of 1.
        let solver = Dopri5 { min_step: 1e-10, ..Dopri5::default() };
        let mut h = 0.5;
        let out = solver.advance(
            |_, y| if y[0] < 1.0 { Some([1.0]) } else { None },
            0.0,
            [0.0],
            2.0,
            1.0,
            &mut h,
            |_, _, _| true,
        );
        assert_eq!(out.halt, Halt::Underflow);
        assert!(out.y[0] < 1.0 && out.y[0] > 1.0 - 1e-8);
    }
}
