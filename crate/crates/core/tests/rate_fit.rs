use blowup_core::asymptotics::{xi, Adjudication, Variant};
use blowup_core::karamata::{KaramataSpec, YKind};
use blowup_core::nonlinearity::NonlinearitySpec;
use blowup_core::radial::SolverOptions;
use blowup_core::rate_fit::*;
use blowup_core::{Coefficient, Error, PhiTransform, RadialProblem, SolutionProfile};
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid(finest: f64) -> Vec<f64> {
    let n = (finest.ln() / 0.9f64.ln()).ceil() as i32;
    (0..=n).map(|j| 0.9f64.powi(j)).collect()
}

fn synthetic(finest: f64, u: impl Fn(f64) -> f64) -> SolutionProfile {
    let d = grid(finest);
    let us = d.iter().map(|&d| u(d)).collect();
    SolutionProfile::from_distances(1.0, d, us)
}

/// k ≡ 1, f = u³, p = 2: K(d) = d and φ(t) = √2/t.
fn flat() -> &'static (KaramataSpec, PhiTransform) {
    static S: OnceLock<(KaramataSpec, PhiTransform)> = OnceLock::new();
    S.get_or_init(|| {
        (KaramataSpec::power(0.0, 0.0).unwrap(), PhiTransform::new(NonlinearitySpec::power(3.0), 2.0).unwrap())
    })
}

fn cubic_interval() -> RadialProblem {
    RadialProblem::interval(1.0, 2.0, 0.0, NonlinearitySpec::power(3.0)).unwrap()
}

fn critical(pr: &RadialProblem) -> SolutionProfile {
    pr.critical_profile(&pr.critical_bracket().unwrap()).unwrap()
}

#[test]
fn power_fit_on_computed_profiles() {
    let f = fit_power(&critical(&cubic_interval()), Window::default()).unwrap();
    assert!((f.beta_hat - 1.0).abs() < 0.02);
    assert!((f.c_hat / 2f64.sqrt() - 1.0).abs() < 0.05);

    let pr = RadialProblem::interval(1.0, 3.0, 0.5, NonlinearitySpec::power(4.0)).unwrap();
    let f = fit_power(&critical(&pr), Window::default()).unwrap();
    assert!((f.beta_hat / 1.25 - 1.0).abs() < 0.02);
}

#[test]
fn synthetic_second_order() {
    let (k, tr) = flat();
    let lead = |d: f64| 2f64.sqrt() / d;
    let y = YKind::PowerZeta { zeta: 0.5 };
    let w = Window::new(1e-8, 1e-2).unwrap();
    let clean = synthetic(1e-9, |d| lead(d) * (1.0 + 0.3 * d.sqrt()));
    let s = second_order_correction(&clean, 1.0, None, k, tr, y, w).unwrap();
    assert!((s.chi_hat / 0.3 - 1.0).abs() < 0.02, "{}", s.chi_hat);
    assert!(!s.outside_hypothesis);

    let dirty = synthetic(1e-9, |d| lead(d) * (1.0 + 0.3 * d.sqrt() + 0.05 * d.powf(0.75)));
    let s = second_order_correction(&dirty, 1.0, None, k, tr, y, w).unwrap();
    assert!((s.chi_hat / 0.3 - 1.0).abs() < 0.05, "{}", s.chi_hat);

    let none = synthetic(1e-9, lead);
    let s = second_order_correction(&none, 1.0, None, k, tr, y, w).unwrap();
    assert!(s.chi_hat.abs() < 0.15 * 0.3);
}

#[test]
fn second_order_preconditions() {
    let (k, tr) = flat();
    let y = YKind::PowerZeta { zeta: 1.0 };
    let coarse = synthetic(1e-5, |d| 2f64.sqrt() / d);
    let e = second_order_correction(&coarse, 1.0, None, k, tr, y, Window::default()).unwrap_err();
    assert!(matches!(e, Error::InsufficientResolution { .. }));

    let pr = cubic_interval();
    let prof = critical(&pr);
    let first = first_order_ratio(&prof, &pr, k, tr, Window::default()).unwrap();
    let e = second_order_correction(&prof, 1.1, Some(&first), k, tr, y, Window::default()).unwrap_err();
    assert!(matches!(e, Error::FirstOrderMismatch { .. }));
    let s = second_order_correction(&prof, 1.0, Some(&first), k, tr, y, Window::default()).unwrap();
    assert!(s.outside_hypothesis);
}

#[test]
fn first_order_ratio_for_cubic() {
    let (k, tr) = flat();
    let pr = cubic_interval();
    let prof = critical(&pr);
    let r = first_order_ratio(&prof, &pr, k, tr, Window::default()).unwrap();
    let xi0 = xi(2.0, 0.0, 2.0, 1.0, 1.0, Variant::TheoremNumerator2).unwrap();
    assert!((r.xi_hat - xi0).abs() <= 2.0 * r.stderr, "{} ± {}", r.xi_hat, r.stderr);

    let shifted = first_order_ratio(&prof, &pr, k, tr, Window::new(1e-6, 1e-3).unwrap()).unwrap();
    assert!((shifted.xi_hat - r.xi_hat).abs() < r.stderr);

    let fine = pr.clone().with_options(SolverOptions { grading: 0.95, ..SolverOptions::default() });
    let refined = first_order_ratio(&critical(&fine), &fine, k, tr, Window::default()).unwrap();
    assert!((refined.xi_hat - r.xi_hat).abs() < r.stderr);
}

#[test]
fn coefficient_scaling_law() {
    let (k, tr) = flat();
    let pr = cubic_interval();
    let base = first_order_ratio(&critical(&pr), &pr, k, tr, Window::default()).unwrap();
    for lambda in [0.25, 4.0] {
        let scaled = pr.clone().with_coefficient(Coefficient::constant(lambda));
        let r = first_order_ratio(&critical(&scaled), &scaled, k, tr, Window::default()).unwrap();
        let want = base.xi_hat * lambda.powf(-0.5);
        let err = r.stderr.hypot(base.stderr * lambda.powf(-0.5));
        assert!((r.xi_hat - want).abs() <= 2.0 * err, "lambda={lambda}");
    }
}

#[test]
fn decomposition_mismatch() {
    let (k, tr) = flat();
    let pr = cubic_interval().with_coefficient(Coefficient::distance_power(1.0, 0.5));
    let prof = critical(&pr);
    let e = first_order_ratio(&prof, &pr, k, tr, Window::default()).unwrap_err();
    assert!(matches!(e, Error::DecompositionMismatch { .. }));
}

#[test]
fn adjudication() {
    let w = Window::default();
    let control = adjudicate_case(AdjudicationCase { p: 2.0, alpha: 0.0, sigma: 2.0, kernel_q: None }, w).unwrap();
    assert_eq!(control.verdict, Adjudication::InconclusiveByDesign);
    let c = adjudicate_case(AdjudicationCase { p: 3.0, alpha: 0.0, sigma: 3.0, kernel_q: None }, w).unwrap();
    assert_eq!(c.verdict, Adjudication::Proof);
    assert!(c.margin_proof <= 2.0);
    let report = adjudicate_variant(&[AdjudicationCase { p: 2.0, alpha: 0.0, sigma: 2.0, kernel_q: None }], w).unwrap();
    assert_eq!(report.cases.len(), 1);
}

#[test]
fn classify_margins() {
    assert_eq!(classify(1.0, 0.01, 1.0, 1.0), Adjudication::InconclusiveByDesign);
    assert_eq!(classify(1.0, 0.01, 1.005, 0.995), Adjudication::Inconclusive);
    assert_eq!(classify(1.0, 0.001, 1.0, 0.9), Adjudication::Theorem);
    assert_eq!(classify(1.0, 0.001, 1.2, 0.9), Adjudication::Neither);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_powers_recover_four_digits(beta in 0.2f64..3.0, c in 0.1f64..10.0) {
        let p = synthetic(1e-7, |d| c * d.powf(-beta));
        let f = fit_power(&p, Window::default()).unwrap();
        prop_assert!((f.beta_hat / beta - 1.0).abs() < 1e-4);
        prop_assert!((f.c_hat / c - 1.0).abs() < 1e-4);
    }

    #[test]
    fn verdict_is_decisive_only_with_small_stderr(m in 0.5f64..1.5, se in 0.0f64..0.1) {
        let v = Verdict::judge("q", m, se, 1.0, 0.05);
        if se >= 0.05 / 3.0 {
            prop_assert_eq!(v.status, Status::Warn);
        } else {
            prop_assert_eq!(v.status == Status::Pass, (m - 1.0).abs() <= 0.05);
        }
    }
}
