use blowup_core::karamata::{KaramataSpec, KernelKind, SecondOrderClass, YKind};
use blowup_core::Error;
use proptest::prelude::*;

fn kinds(q: f64) -> [KernelKind; 3] {
    [KernelKind::Power { q }, KernelKind::Log1pPower { q }, KernelKind::Expm1Power { q }]
}

#[test]
fn example_weights_share_l1() {
    for q in [0.5, 1.0, 2.0] {
        for alpha in [-0.5, 0.0, 0.5] {
            for kind in kinds(q) {
                let label = format!("{kind:?} alpha={alpha}");
                let s = KaramataSpec::new(kind, alpha).unwrap();
                let l = s.estimate_limits().unwrap();
                let want = 1.0 / (1.0 + q - alpha / 2.0);
                assert!((l.l1 - want).abs() < 1e-6, "{label}: {}", l.l1);
                assert!(l.l0.abs() < 1e-6, "{label}: l0 = {}", l.l0);
                assert!(s.dual_limit_check().unwrap() < 1e-6, "{label}");
            }
        }
    }
}

#[test]
fn nrvz_index_matches_l1() {
    let s = KaramataSpec::new(KernelKind::Log1pPower { q: 2.0 }, 0.5).unwrap();
    let l = s.estimate_limits().unwrap();
    let (got, want) = (l.nrvz_index_k.unwrap(), l.nrvz_index_target.unwrap());
    assert!((got - want).abs() < 1e-6);
}

#[test]
fn primitive_of_log1p_square() {
    // K(t) = Σ (−1)^{n+1} t^{2n+1} / (n(2n+1)), summed from the small end.
    let closed = |t: f64| {
        (1..80).rev().map(|n| {
            let n = n as f64;
            let s = if n as i64 % 2 == 1 { 1.0 } else { -1.0 };
            s * t.powf(2.0 * n + 1.0) / (n * (2.0 * n + 1.0))
        }).sum::<f64>()
    };
    let s = KaramataSpec::new(KernelKind::Log1pPower { q: 2.0 }, 0.0).unwrap();
    let k = s.big_k(0.5).unwrap();
    assert!((k - 0.038_866_993_658_717_11).abs() < 1e-15);
    assert!((k - closed(0.5)).abs() < 1e-15);
    for t in [1e-4, 0.01, 0.3] {
        assert!(((s.big_k(t).unwrap() - closed(t)) / closed(t)).abs() < 1e-9, "t={t}");
    }
}

#[test]
fn second_order_limits() {
    let y = YKind::PowerZeta { zeta: 1.0 };
    let kp: blowup_core::ScalarFn = std::sync::Arc::new(|t: f64| 1.0 + 2.0 * t);
    let s = KaramataSpec::custom("t(1+t)", |t| t * (1.0 + t), Some(kp), 0.0).unwrap();
    let (class, v) = s.second_order_limit(y).unwrap();
    assert_eq!(class, SecondOrderClass::K01Zeta);
    assert!((v + 1.0 / 3.0).abs() < 1e-6, "{v}");

    let s = KaramataSpec::new(KernelKind::Log1pPower { q: 2.0 }, 0.0).unwrap();
    // K/k = t/3 + t³/15 + O(t⁵), so (K/K')' − 1/3 ~ t²/5.
    let (_, v) = s.second_order_limit(YKind::PowerZeta { zeta: 2.0 }).unwrap();
    assert!((v - 0.2).abs() < 1e-6, "{v}");

    let s = KaramataSpec::power(0.5, 0.0).unwrap();
    let (_, v) = s.second_order_limit(y).unwrap();
    assert!(v.abs() < 1e-6, "{v}");
}

/// `K = exp(−x^{1+τ}/(1+τ))`, `x = −ln t`, for which `(K/K')' ~ x^{−τ}`.
fn k0_tau(tau: f64) -> KaramataSpec {
    let k = move |t: f64| {
        let x = -t.ln();
        (-x.powf(1.0 + tau) / (1.0 + tau)).exp() * x.powf(tau) / t
    };
    KaramataSpec::custom("k0_tau", k, None, 0.0).unwrap()
}

#[test]
fn rapidly_varying_kernel_is_k0_tau() {
    let s = k0_tau(1.0);
    let l = s.estimate_limits().unwrap();
    assert_eq!(l.l1, 0.0);
    assert_eq!(l.l1_scale, "log");
    let (class, v) = s.second_order_with(l.l1, YKind::LogTau { tau: 1.0 }).unwrap();
    assert_eq!(class, SecondOrderClass::K0Tau);
    assert!((v - 1.0).abs() < 1e-3, "{v}");
}

#[test]
fn mismatched_scale_is_reported() {
    let s = KaramataSpec::new(KernelKind::Log1pPower { q: 2.0 }, 0.0).unwrap();
    let e = s.second_order_limit(YKind::PowerZeta { zeta: 3.0 }).unwrap_err();
    assert!(matches!(e, Error::WrongScale | Error::NonConvergent { .. }), "{e}");
}

#[test]
fn membership_failures() {
    assert!(matches!(KaramataSpec::power(1.0, -1.0), Err(Error::NonIntegrableWeight { .. })));
    let s = KaramataSpec::power(-1.2, 0.0).unwrap();
    assert!(matches!(s.validate(), Err(Error::NonIntegrableWeight { .. })));
    let m = KaramataSpec::power(-0.8, 0.5).unwrap().membership();
    assert!(m.plain_integrable && !m.weighted_integrable);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_kernel_ratio_is_exact(q in -0.4f64..3.0, alpha in -0.9f64..1.5, t in 1e-8f64..0.9) {
        let c = 1.0 + q - alpha / 2.0;
        prop_assume!(c > 0.05);
        let s = KaramataSpec::power(q, alpha).unwrap();
        prop_assert!((s.kernel_ratio(t).unwrap() - 1.0 / c).abs() < 1e-10);
        let k = s.big_k(t).unwrap();
        prop_assert!((k / (t.powf(c) / c) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn l1_is_in_unit_interval_for_nondecreasing(q in 0.5f64..3.0, alpha in -0.9f64..0.9) {
        let l = KaramataSpec::new(KernelKind::Log1pPower { q }, alpha).unwrap().estimate_limits().unwrap();
        prop_assert!(l.l1 >= -1e-9 && l.l1 <= 1.0 + 1e-9);
    }
}
