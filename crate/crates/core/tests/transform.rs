use blowup_core::nonlinearity::{NonlinearitySpec, SlowlyVarying};
use blowup_core::transform::PhiTransform;
use blowup_core::Error;
use proptest::prelude::*;
use std::sync::OnceLock;

fn log1p_transform() -> &'static PhiTransform {
    static T: OnceLock<PhiTransform> = OnceLock::new();
    T.get_or_init(|| PhiTransform::new(NonlinearitySpec::new(2.0, SlowlyVarying::Log1p), 2.0).unwrap())
}

/// `φ(t) = (c / ((ρ−1) t))^{1/(ρ−1)}`, `c = (q/(σ+2))^{−1/p}`, `ρ = (σ+2)/p`:
/// the tail integral of a pure power done by hand.
fn power_phi(sigma: f64, p: f64, t: f64) -> f64 {
    let q = p / (p - 1.0);
    let rho = (sigma + 2.0) / p;
    let c = (q / (sigma + 2.0)).powf(-1.0 / p);
    (c / ((rho - 1.0) * t)).powf(1.0 / (rho - 1.0))
}

#[test]
fn identities_hold_on_unit_range() {
    for (l, p) in [("one", 2.0), ("log1p", 2.0), ("loglog", 2.0), ("one", 3.0), ("log1p", 1.5)] {
        let tr = PhiTransform::new(NonlinearitySpec::new(2.0, SlowlyVarying::parse(l).unwrap()), p).unwrap();
        for i in 0..=12 {
            let t = 10f64.powf(-6.0 + i as f64 * 0.5);
            let r = tr.identity_residuals(t).unwrap();
            assert!(r.r1 < 1e-5 && r.r2 < 1e-5, "{l} p={p} t={t}: {r:?}");
        }
    }
}

#[test]
fn power_case_matches_closed_form() {
    for (sigma, p) in [(2.0, 2.0), (3.0, 3.0), (1.0, 1.5), (2.5, 3.0)] {
        let tr = PhiTransform::new(NonlinearitySpec::new(sigma, SlowlyVarying::One), p).unwrap();
        for i in 0..=12 {
            let t = 10f64.powf(-6.0 + i as f64 * 0.5);
            let rel = tr.phi(t).unwrap() / power_phi(sigma, p, t) - 1.0;
            assert!(rel.abs() < 1e-8, "sigma={sigma} p={p} t={t}: {rel:e}");
        }
    }
}

#[test]
fn boundary_limits_for_powers() {
    let tr = log1p_transform();
    let idx = tr.phi_nrvz_index().unwrap();
    assert!(idx.error() < 1e-3, "{idx:?}");
    let flux = tr.flux_limit().unwrap();
    assert!(flux.error() < 1e-3, "{flux:?}");
    let (c1, c2) = tr.curvature_limits().unwrap();
    assert!(c1.error() < 1e-3 && c2.error() < 1e-3, "{c1:?} {c2:?}");
}

#[test]
fn cache_agrees_with_inversion() {
    let tr = PhiTransform::new(NonlinearitySpec::new(2.0, SlowlyVarying::LogLog), 2.0).unwrap();
    for t in [3e-7, 2e-4, 0.05, 0.7] {
        let (c, e) = (tr.phi_cached(t), tr.phi(t).unwrap());
        assert!((c / e - 1.0).abs() < 1e-6, "t={t}");
    }
}

#[test]
fn divergent_tail_is_rejected() {
    let e = PhiTransform::new(NonlinearitySpec::power(2.0), 3.0).unwrap_err();
    assert!(matches!(e, Error::DivergentIntegral { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inverse_round_trip(sigma in 0.5f64..4.0, t in 1e-6f64..1.0) {
        let tr = PhiTransform::new(NonlinearitySpec::new(sigma, SlowlyVarying::One), 2.0).unwrap();
        let u = tr.phi(t).unwrap();
        prop_assert!((tr.phi_inverse(u).unwrap() / t - 1.0).abs() < 1e-10);
        prop_assert!((u / power_phi(sigma, 2.0, t) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn phi_is_decreasing(a in 1e-6f64..0.5, b in 1e-6f64..0.5) {
        prop_assume!(a < b * 0.999);
        let tr = log1p_transform();
        prop_assert!(tr.phi(a).unwrap() > tr.phi(b).unwrap());
    }
}
