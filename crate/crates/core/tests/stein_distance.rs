use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stein_chaos::distance::{
    bootstrap_std_error, kolmogorov_to_normal, tv_to_normal_density, wasserstein_to_normal, Density, SampleSet,
};
use stein_chaos::gauss::{std_normal_cdf, std_normal_quantile, RandomStream};
use stein_chaos::indep::{simulate_sum, IndepSumModel};
use stein_chaos::stein::{solve_stein, BoundedFn, LipschitzFn, TestFunction};
use stein_chaos::Metric;

fn phi_cdf(w: f64) -> f64 {
    std_normal_cdf(w).unwrap()
}

/// `√(2π) e^{w²/2} Φ(w) (1 - Φ(x))` below `x`, mirrored above it.
fn indicator_oracle(x: f64, w: f64) -> f64 {
    let pre = (2.0 * PI).sqrt() * (0.5 * w * w).exp();
    if w <= x {
        pre * phi_cdf(w) * (1.0 - phi_cdf(x))
    } else {
        pre * phi_cdf(x) * phi_cdf(-w)
    }
}

#[test]
fn indicator_solution_matches_closed_form_and_quadrature() {
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let sol = solve_stein(TestFunction::indicator(x)).unwrap();
        for i in 0..=160 {
            let w = -8.0 + 0.1 * i as f64;
            let oracle = indicator_oracle(x, w);
            assert!((sol.eval_f(w) - oracle).abs() <= 1e-10, "x={x} w={w}");
            assert!((sol.f_by_quadrature(w) - sol.eval_f(w)).abs() <= 1e-10, "x={x} w={w}");
        }
    }
}

#[test]
fn derivative_matches_numerical_differentiation() {
    // f' from the equation against central differences of the integral form.
    let families = [
        TestFunction::Lipschitz(LipschitzFn::Sin),
        TestFunction::Lipschitz(LipschitzFn::Abs { center: 0.5 }),
        TestFunction::Bounded(BoundedFn::Tanh),
        TestFunction::Bounded(BoundedFn::Cos),
        TestFunction::smoothed_indicator(0.0, 0.5).unwrap(),
    ];
    let step = 1e-4;
    for h in families {
        let sol = solve_stein(h).unwrap();
        // Points avoid the kinks of h, where f'' jumps.
        for &w in &[-6.3, -2.1, -0.7, 0.12, 0.33, 1.7, 4.9] {
            let fd = (sol.f_by_quadrature(w + step) - sol.f_by_quadrature(w - step)) / (2.0 * step);
            assert!((fd - sol.eval_fprime(w)).abs() < 1e-6, "{h} at {w}: {fd} vs {}", sol.eval_fprime(w));
        }
    }
}

#[test]
fn expectations_have_closed_forms() {
    let cases = [
        (TestFunction::Bounded(BoundedFn::Cos), (-0.5f64).exp()),
        (TestFunction::Bounded(BoundedFn::Tanh), 0.0),
        (TestFunction::Lipschitz(LipschitzFn::Abs { center: 0.0 }), (2.0 / PI).sqrt()),
        (TestFunction::Bounded(BoundedFn::Interval { lo: -1.0, hi: 0.5 }), phi_cdf(0.5) - phi_cdf(-1.0)),
        (TestFunction::indicator(1.0), phi_cdf(1.0)),
    ];
    for (h, want) in cases {
        assert_abs_diff_eq!(h.expectation().unwrap(), want, epsilon = 1e-13);
    }
}

#[test]
fn bounded_solutions_decay_in_the_tails() {
    for h in [
        TestFunction::Bounded(BoundedFn::Tanh),
        TestFunction::Bounded(BoundedFn::Cos),
        TestFunction::indicator(0.5),
        TestFunction::Bounded(BoundedFn::Interval { lo: -1.0, hi: 0.5 }),
    ] {
        let sol = solve_stein(h).unwrap();
        let sup_h = 1.0;
        for i in 0..400 {
            let w = 2.0 + 0.25 * i as f64;
            for w in [w, -w] {
                let f = sol.eval_f(w);
                assert!(f.abs() <= (sup_h + sol.eh_z.abs()) / w.abs() + 1e-9, "{h} at {w}: {f}");
            }
        }
    }
}

#[test]
fn indicator_solution_positive() {
    let sol = solve_stein(TestFunction::indicator(-1.0)).unwrap();
    for i in 0..=400 {
        let w = -20.0 + 0.1 * i as f64;
        assert!(sol.eval_f(w) > 0.0, "w={w}");
    }
}

fn quantile_grid(n: usize) -> SampleSet {
    SampleSet::new((1..=n).map(|i| std_normal_quantile((i as f64 - 0.5) / n as f64).unwrap()).collect()).unwrap()
}

/// `∫ |F_n - Φ|` for a sorted sample, exact piecewise through the
/// antiderivative `G(t) = tΦ(t) + φ(t)` of Φ.
fn wasserstein_oracle(x: &[f64]) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let g = |t: f64| t * phi_cdf(t) + pdf(t);
    let n = x.len() as f64;
    let last = x[x.len() - 1];
    let mut total = g(x[0]) + (pdf(last) - last * phi_cdf(-last));
    for (i, w) in x.windows(2).enumerate() {
        let level = (i + 1) as f64 / n;
        let (a, b) = (w[0], w[1]);
        let c = std_normal_quantile(level).unwrap().clamp(a, b);
        // Φ < level on [a, c), Φ > level on (c, b].
        total += level * (c - a) - (g(c) - g(a)) + (g(b) - g(c)) - level * (b - c);
    }
    total
}

#[test]
fn quantile_grid_distances() {
    let n = 10_000;
    let grid = quantile_grid(n);
    let w = wasserstein_to_normal(&grid).unwrap().estimate;
    // The discretization error of the midpoint grid is 2.18e-4 at this n.
    assert_abs_diff_eq!(w, wasserstein_oracle(grid.sorted_values()), epsilon = 1e-10);
    assert!(w <= 2.2e-4, "d_W = {w}");
    let k = kolmogorov_to_normal(&grid).unwrap().estimate;
    assert!(k <= 1e-4 + 0.5 / n as f64, "d_K = {k}");
    // Doubling n roughly halves the estimate; the tails decay like √(log n)/n,
    // so the ratio sits slightly above one half (0.517 here).
    let w2 = wasserstein_to_normal(&quantile_grid(2 * n)).unwrap().estimate;
    assert_abs_diff_eq!(w2, wasserstein_oracle(quantile_grid(2 * n).sorted_values()), epsilon = 1e-10);
    assert!(w2 <= 0.55 * w && w2 >= 0.5 * w, "{w2} vs {w}");
}

#[test]
fn shifting_a_symmetric_sample_increases_distance() {
    let base = quantile_grid(2000);
    let d0 = wasserstein_to_normal(&base).unwrap().estimate;
    let mut prev = d0;
    for c in [0.01, 0.1, 0.5] {
        let shifted = SampleSet::new(base.sorted_values().iter().map(|v| v + c).collect()).unwrap();
        let d = wasserstein_to_normal(&shifted).unwrap().estimate;
        assert!(d > prev);
        // The coupling by translation gives d_W(Z + c, Z) = c.
        assert!((d - c).abs() <= d0 + 1e-12);
        prev = d;
    }
}

#[test]
fn wasserstein_of_point_mass() {
    let s = SampleSet::new(vec![0.0; 10]).unwrap();
    assert_abs_diff_eq!(wasserstein_to_normal(&s).unwrap().estimate, (2.0 / PI).sqrt(), epsilon = 1e-8);
}

#[test]
fn chi_square_tv_decreases() {
    let tv: Vec<f64> = [4u32, 16, 64]
        .iter()
        .map(|&n| tv_to_normal_density(&Density::StandardizedChiSquare { n }).unwrap().estimate)
        .collect();
    assert!(tv.iter().all(|&v| v > 0.0 && v < 1.0));
    assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
}

#[test]
fn sampled_kolmogorov_below_density_tv() {
    let n = 16;
    let set = simulate_sum(&IndepSumModel::chi_square(n).unwrap(), RandomStream::new(31, 0), 1_000_000).unwrap();
    let dk = kolmogorov_to_normal(&set).unwrap().estimate;
    let se = bootstrap_std_error(&set, Metric::Kolmogorov, 24, RandomStream::new(31, 1)).unwrap();
    let tv = tv_to_normal_density(&Density::StandardizedChiSquare { n: n as u32 }).unwrap().estimate;
    assert!(dk <= tv + 3.0 * se, "{dk} vs {tv}");
}

#[test]
fn tv_shifted_normal_matches_quadrature_oracle() {
    // ½∫|φ(t-δ) - φ(t)| dt by plain composite Simpson on a fine grid.
    let delta = 0.1;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let (a, b, m) = (-15.0, 15.0, 200_000);
    let h = (b - a) / m as f64;
    let g = |t: f64| (pdf(t - delta) - pdf(t)).abs();
    // The kink at δ/2 falls on a grid point.
    let simpson: f64 = (0..m / 2)
        .map(|k| {
            let t0 = a + 2.0 * k as f64 * h;
            h / 3.0 * (g(t0) + 4.0 * g(t0 + h) + g(t0 + 2.0 * h))
        })
        .sum();
    let got = tv_to_normal_density(&Density::ShiftedNormal { delta }).unwrap().estimate;
    assert_abs_diff_eq!(got, 0.5 * simpson, epsilon = 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_are_permutation_invariant(mut v in prop::collection::vec(-5.0f64..5.0, 2..60), seed in 0u64..1000) {
        let a = SampleSet::new(v.clone()).unwrap();
        // Deterministic shuffle.
        let n = v.len();
        let mut r = RandomStream::new(seed, 0).reader(0);
        for i in (1..n).rev() {
            let j = (r.next_word() % (i as u64 + 1)) as usize;
            v.swap(i, j);
        }
        let b = SampleSet::new(v).unwrap();
        prop_assert_eq!(wasserstein_to_normal(&a).unwrap().estimate, wasserstein_to_normal(&b).unwrap().estimate);
        prop_assert_eq!(kolmogorov_to_normal(&a).unwrap().estimate, kolmogorov_to_normal(&b).unwrap().estimate);
    }

    #[test]
    fn distances_in_range(v in prop::collection::vec(-50.0f64..50.0, 2..40)) {
        let s = SampleSet::new(v).unwrap();
        let k = kolmogorov_to_normal(&s).unwrap().estimate;
        prop_assert!((0.0..=1.0).contains(&k));
        prop_assert!(wasserstein_to_normal(&s).unwrap().estimate >= 0.0);
    }

    #[test]
    fn smoothed_indicator_second_difference(w in -6.0f64..6.0, t in -2.0f64..2.0, x in -2.0f64..2.0, eps in 0.05f64..2.0) {
        let h = TestFunction::smoothed_indicator(x, eps).unwrap();
        let sol = solve_stein(h).unwrap();
        let lhs = (sol.eval_fprime(w + t) - sol.eval_fprime(w)).abs();
        let inside = x - t.max(0.0) <= w && w <= x - t.min(0.0) + eps;
        let rhs = (w.abs() + 1.0) * t.abs() + if inside { 1.0 } else { 0.0 };
        prop_assert!(lhs <= rhs + 1e-9, "lhs {} rhs {}", lhs, rhs);
    }
}
