use blowup_core::nonlinearity::NonlinearitySpec;
use blowup_core::radial::{comparison_check, default_schedule, SolverOptions};
use blowup_core::{Coefficient, Error, RadialProblem};
use proptest::prelude::*;

fn cubic() -> NonlinearitySpec {
    NonlinearitySpec::power(3.0)
}

/// `∫₀¹ ds/√(1−s⁴)`, half the lemniscate constant.
const LEMNISCATE_HALF: f64 = 1.311028777146059905232419794945559706841;

#[test]
fn interval_matches_first_integral() {
    // u'² = u⁴/2 + s² with R = ∫₀^∞ du/√(u⁴/2 + s²) = 1 gives s = 2√2 (ϖ/2)².
    let pr = RadialProblem::interval(1.0, 2.0, 0.0, cubic()).unwrap();
    let b = pr.critical_bracket().unwrap();
    let s = 2.0 * 2f64.sqrt() * LEMNISCATE_HALF * LEMNISCATE_HALF;
    assert!((b.lo / s - 1.0).abs() < 1e-10, "{b:?}");
    let prof = pr.critical_profile(&b).unwrap();
    for i in 0..prof.len() {
        let (d, u) = (prof.d[i], prof.u[i]);
        let rel = (u * d / 2f64.sqrt() - 1.0).abs();
        if d <= 1e-3 {
            // The blow-up point is pinned to about one ulp of R.
            assert!(rel < 1e-10 + 2e-15 / d, "d={d}: {rel:e}");
        } else if d <= 0.1 {
            assert!(rel < 5e-3, "d={d}: {rel:e}");
        }
    }
}

#[test]
fn symmetric_critical_value() {
    // u'' = u³, u'(0) = 0 blows up at R = √2 ϖ/(2ψ₀).
    let pr = RadialProblem::new(1, 1.0, 2.0, 0.0, cubic()).unwrap();
    let b = pr.critical_bracket().unwrap();
    let want = 2f64.sqrt() * LEMNISCATE_HALF;
    assert!((b.lo - want).abs() < 1e-10 && (b.hi - want).abs() < 1e-10, "{b:?}");
}

#[test]
fn dirichlet_data_is_met_and_ordered() {
    let pr = RadialProblem::new(2, 1.0, 2.0, 0.0, cubic()).unwrap();
    let mut last: Option<blowup_core::SolutionProfile> = None;
    for k in [1.0, 4.0, 64.0] {
        let s = pr.solve_dirichlet(k).unwrap();
        let v = s.meta.boundary_value.unwrap();
        assert!((v / k - 1.0).abs() < 1e-9, "k={k}: {v}");
        if let Some(prev) = last {
            assert!(comparison_check(&prev, &s).ordered);
        }
        last = Some(s);
    }
}

#[test]
fn large_solution_saturates() {
    let pr = RadialProblem::interval(1.0, 3.0, 0.5, NonlinearitySpec::power(4.0)).unwrap();
    let prof = pr.large_solution(&default_schedule()).unwrap();
    assert!(prof.meta.saturation_gap.unwrap() < 1e-8);
    assert!(prof.meta.limit_mismatch.unwrap() < 1e-8);
    assert_eq!(prof.meta.monotonicity_violation.unwrap(), 0.0);
}

#[test]
fn flux_ratio_lies_between_bounds() {
    for n in [2usize, 3] {
        let pr = RadialProblem::new(n, 1.0, 2.0, 0.0, cubic()).unwrap();
        let prof = pr.critical_profile(&pr.critical_bracket().unwrap()).unwrap();
        for r in prof.flux_ratios(&pr) {
            assert!(r >= 1.0 / n as f64 - 1e-8 && r <= 1.0 + 1e-8, "N={n}: {r}");
        }
    }
}

#[test]
fn first_integral_residual_is_small() {
    let pr = RadialProblem::interval(1.0, 2.0, 0.0, cubic()).unwrap();
    let prof = pr.critical_profile(&pr.critical_bracket().unwrap()).unwrap();
    assert!(prof.meta.residual.unwrap() < 1e-8);
}

#[test]
fn refinement_does_not_move_profile() {
    let pr = RadialProblem::interval(1.0, 2.0, 0.0, cubic()).unwrap();
    let tight = pr.clone().with_options(SolverOptions { rtol: 1e-13, ..SolverOptions::default() });
    let a = pr.critical_profile(&pr.critical_bracket().unwrap()).unwrap();
    let b = tight.critical_profile(&tight.critical_bracket().unwrap()).unwrap();
    let c = comparison_check(&a, &b);
    assert!(c.max_violation < 1e-8);
}

#[test]
fn errors() {
    let linear = RadialProblem::new(2, 1.0, 2.0, 0.0, NonlinearitySpec::power(1.0)).unwrap();
    assert!(matches!(linear.critical_bracket(), Err(Error::NoBlowUp { .. })));
    assert!(RadialProblem::new(2, 1.0, 2.0, 1.0, cubic()).is_err());
    let mut pr = RadialProblem::new(2, 1.0, 2.0, 0.0, cubic()).unwrap();
    pr.left = blowup_core::LeftCondition::Anchored;
    assert!(pr.validate().is_err());
    let weighted = RadialProblem::new(2, 1.0, 2.0, 0.5, cubic()).unwrap();
    assert!(matches!(weighted.sandwich_integral(1.0), Err(Error::Unsupported(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sandwich_bound(psi0 in 0.5f64..20.0, n in 2usize..4) {
        let pr = RadialProblem::new(n, 100.0, 2.0, 0.0, cubic()).unwrap();
        let i = pr.sandwich_integral(psi0).unwrap();
        let r = pr.blow_up_radius(psi0).unwrap().unwrap();
        prop_assert!(i <= r && r <= (n as f64).sqrt() * i, "I={} R={}", i, r);
    }

    /// `u ↦ λu`, `r ↦ r/λ` maps cubic solutions to cubic solutions.
    #[test]
    fn blow_up_radius_scales(psi0 in 1.0f64..5.0, lambda in 1.5f64..4.0) {
        let pr = RadialProblem::new(3, 100.0, 2.0, 0.0, cubic()).unwrap();
        let a = pr.blow_up_radius(psi0).unwrap().unwrap();
        let b = pr.blow_up_radius(lambda * psi0).unwrap().unwrap();
        prop_assert!((a / (lambda * b) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn larger_coefficient_gives_smaller_solution(lambda in 1.5f64..6.0) {
        let pr = RadialProblem::new(2, 1.0, 2.0, 0.0, cubic()).unwrap();
        let big = pr.clone().with_coefficient(Coefficient::constant(lambda));
        let u = pr.critical_profile(&pr.critical_bracket().unwrap()).unwrap();
        let v = big.critical_profile(&big.critical_bracket().unwrap()).unwrap();
        prop_assert!(comparison_check(&v, &u).ordered);
    }
}
