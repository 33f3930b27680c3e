use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stein_chaos::functional::{
    bound_theta_e1mt, chi2_bounds, default_rules, interp_t, GaussianFunctional, PsiKind, SmoothFunctional, TPolynomial,
};
use stein_chaos::gauss::{std_normal_pdf, RandomStream};
use stein_chaos::Metric;

/// Probabilists' Hermite polynomial by its three-term recurrence.
fn he(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        (a, b) = (b, x * b - k as f64 * a);
    }
    b
}

/// For `ψ = He_k/√(k!)` the Ornstein–Uhlenbeck semigroup acts as `u^{k-1}` on
/// `ψ'`, which gives `T(x) = He_{k-1}(x)² / (k-1)!`.
fn hermite_t_oracle(k: usize, x: f64) -> f64 {
    let fact: f64 = (1..k).map(|j| j as f64).product();
    he(k - 1, x).powi(2) / fact
}

#[test]
fn identity_has_constant_t_and_zero_bound() {
    let rules = default_rules();
    let psi = SmoothFunctional::new(PsiKind::Identity);
    for &x in &[-3.0, 0.0, 2.5] {
        assert_abs_diff_eq!(interp_t(&psi, x, &rules.0, &rules.1).unwrap(), 1.0, epsilon = 1e-12);
    }
    let g = GaussianFunctional::new(PsiKind::Identity, 1).unwrap();
    for metric in Metric::ALL {
        let r = bound_theta_e1mt(&g, metric, &rules, RandomStream::new(1, 0), 0).unwrap();
        assert!(r.bound.abs() < 1e-12, "{metric}: {}", r.bound);
    }
}

#[test]
fn hermite_t_matches_semigroup_oracle() {
    let rules = default_rules();
    for k in 1..=16 {
        for n in [1usize, 3] {
            let psi = SmoothFunctional::summand(PsiKind::Hermite { k }, n).unwrap();
            let poly = TPolynomial::fit(&psi, &rules.0, &rules.1).unwrap();
            for &x in &[-4.1, -1.3, 0.0, 0.77, 2.2, 5.0] {
                let want = hermite_t_oracle(k, x) / n as f64;
                let got = interp_t(&psi, x, &rules.0, &rules.1).unwrap();
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "k={k} x={x}: {got} vs {want}");
                assert!((poly.eval(x) - want).abs() <= 1e-8 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn chi2_t_is_x_squared_over_n() {
    let rules = default_rules();
    for n in [1usize, 2, 10, 100] {
        let psi = SmoothFunctional::summand(PsiKind::Chi2, n).unwrap();
        for i in 0..=20 {
            let x = -5.0 + 0.5 * i as f64;
            let t = interp_t(&psi, x, &rules.0, &rules.1).unwrap();
            assert!((t - x * x / n as f64).abs() < 1e-8);
        }
    }
}

#[test]
fn chi2_bound_for_one_summand() {
    // E|1 - Z²| = 4φ(1), splitting at |z| = 1.
    let e = 4.0 * std_normal_pdf(1.0);
    let g = GaussianFunctional::new(PsiKind::Chi2, 1).unwrap();
    let rules = default_rules();
    let w = bound_theta_e1mt(&g, Metric::Wasserstein, &rules, RandomStream::new(1, 0), 0).unwrap();
    assert_abs_diff_eq!(w.bound, (2.0 / PI).sqrt() * e, epsilon = 1e-6);
    let tv = bound_theta_e1mt(&g, Metric::TotalVariation, &rules, RandomStream::new(1, 0), 0).unwrap();
    assert_abs_diff_eq!(tv.bound, 2.0 * e, epsilon = 1e-6);
}

#[test]
fn chi2_closed_form_bounds() {
    for n in [1usize, 10, 50, 100] {
        let b = chi2_bounds(n).unwrap();
        let nf = n as f64;
        assert_abs_diff_eq!(b.d_w, 2.0 / (PI * nf).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.d_k, (2.0 / nf).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.d_tv, 2.0 * (2.0 / nf).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.var_t, 2.0 / nf, epsilon = 1e-15);
    }
    assert!(chi2_bounds(0).is_err());
}

#[test]
fn sampled_bound_dominates_empirical_distance() {
    let rules = default_rules();
    let g = GaussianFunctional::new(PsiKind::Chi2, 20).unwrap();
    let r = bound_theta_e1mt(&g, Metric::Kolmogorov, &rules, RandomStream::new(9, 0), 200_000).unwrap();
    let d = r.empirical_distance.unwrap();
    let se = r.empirical_std_error.unwrap();
    assert!(d <= r.bound + 3.0 * se);
    // E|1 - T| ≤ √Var T by Cauchy-Schwarz, with Var T = 2/n here.
    assert!(r.bound <= (0.1f64).sqrt() + 3.0 * r.mc_std_error);
    assert_abs_diff_eq!(r.variance_bound.unwrap(), (0.1f64).sqrt(), epsilon = 1e-10);
}

#[test]
fn parsing_builtins() {
    assert_eq!("builtin:chi2".parse::<PsiKind>().unwrap(), PsiKind::Chi2);
    assert_eq!("hermite:4".parse::<PsiKind>().unwrap(), PsiKind::Hermite { k: 4 });
    assert!("hermite:0".parse::<PsiKind>().is_err());
    assert!("hermite:17".parse::<PsiKind>().is_err());
    assert!("exp".parse::<PsiKind>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn t_is_non_negative_for_chi2(x in -10.0f64..10.0, n in 1usize..50) {
        let rules = default_rules();
        let psi = SmoothFunctional::summand(PsiKind::Chi2, n).unwrap();
        prop_assert!(interp_t(&psi, x, &rules.0, &rules.1).unwrap() >= -1e-12);
    }
}
