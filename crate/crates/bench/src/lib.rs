//! Fixtures shared by the benchmarks in `benches/`.

use blowup_core::{KaramataSpec, KernelKind, NonlinearitySpec, RadialProblem, Result};

/// `u'' = u³` on `(0, 1)`, `u(0) = 0`.
pub fn cubic_interval() -> Result<RadialProblem> {
    RadialProblem::interval(1.0, 2.0, 0.0, NonlinearitySpec::power(3.0))
}

/// `Δu = u³` in the unit disc.
pub fn cubic_disc() -> Result<RadialProblem> {
    RadialProblem::new(2, 1.0, 2.0, 0.0, NonlinearitySpec::power(3.0))
}

pub fn log1p_kernel() -> Result<KaramataSpec> {
    KaramataSpec::new(KernelKind::Log1pPower { q: 1.0 }, 0.5)
}
