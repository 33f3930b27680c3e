use std::f64::consts::{E, PI};

use approx::assert_abs_diff_eq;
use stein_chaos::chaos::{ChaosFunctional, CoeffVector, MultiIndex};
use stein_chaos::gauss::{sample_std_normal, RandomStream};
use stein_chaos::hida::{bound_vs_empirical, carre_functional, carre_bound, BoundOptions, Normalization};
use stein_chaos::{Error, Metric};

fn product01() -> ChaosFunctional {
    ChaosFunctional::basis(MultiIndex::new(vec![(0, 1), (1, 1)]).unwrap())
}

#[test]
fn product_of_two_coordinates() {
    // φ = ξ₀ξ₁ gives Γ = (ξ₀² + ξ₁²)/2, an Exp(1) variable, and E|1 - Exp(1)| = 2/e.
    let phi = product01();
    let gamma = carre_functional(&phi).unwrap();
    for &(x, y) in &[(0.3, -1.1), (2.0, 0.5)] {
        let v = gamma.evaluate(&CoeffVector::from_dense(&[x, y])).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (x * x + y * y), epsilon = 1e-14);
    }
    let r = carre_bound(&phi, Metric::Wasserstein, RandomStream::new(1, 0), 50_000, &BoundOptions::default()).unwrap();
    assert_eq!(r.method, "quadrature");
    assert_abs_diff_eq!(r.e_abs_dev, 2.0 / E, epsilon = 1e-8);
    assert_abs_diff_eq!(r.bound, (2.0 / PI).sqrt() * 2.0 / E, epsilon = 1e-8);
    // The Monte Carlo cross-check agrees within five standard errors.
    assert!((r.mc_e_abs_dev.unwrap() - 2.0 / E).abs() < 5.0 * r.mc_std_error);
}

#[test]
fn three_coordinates_fall_back_to_monte_carlo() {
    // φ = ξ₀ξ₁ξ₂: Γ = (ξ₁²ξ₂² + ξ₀²ξ₂² + ξ₀²ξ₁²)/3, sampled here independently.
    let phi = ChaosFunctional::basis(MultiIndex::new(vec![(0, 1), (1, 1), (2, 1)]).unwrap());
    let r = carre_bound(&phi, Metric::Kolmogorov, RandomStream::new(2, 0), 400_000, &BoundOptions::default()).unwrap();
    assert_eq!(r.method, "monte-carlo");
    let z = sample_std_normal(RandomStream::new(99, 0), 3 * 400_000);
    let dev: Vec<f64> = z
        .chunks(3)
        .map(|c| {
            let (a, b, d) = (c[0] * c[0], c[1] * c[1], c[2] * c[2]);
            (1.0 - (b * d + a * d + a * b) / 3.0).abs()
        })
        .collect();
    let n = dev.len() as f64;
    let mean = dev.iter().sum::<f64>() / n;
    let sd = (dev.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let tol = 5.0 * (sd / n.sqrt()).hypot(r.mc_std_error);
    assert!((r.e_abs_dev - mean).abs() < tol, "{} vs {mean}", r.e_abs_dev);
}

#[test]
fn empirical_distance_respects_bound() {
    let phi = product01();
    let r = bound_vs_empirical(&phi, Metric::Kolmogorov, RandomStream::new(3, 0), 200_000, &BoundOptions::default()).unwrap();
    assert!(r.empirical_within_bound());
    assert!(r.empirical_distance.unwrap() <= r.bound);
    assert!(matches!(
        bound_vs_empirical(&phi, Metric::TotalVariation, RandomStream::new(3, 0), 100, &BoundOptions::default()),
        Err(Error::Capability(_))
    ));
}

#[test]
fn normalization_policies() {
    let phi = ChaosFunctional::linear(&CoeffVector::from_dense(&[1.0, 1.0]));
    let keep = carre_bound(&phi, Metric::Kolmogorov, RandomStream::new(1, 0), 0, &BoundOptions::default()).unwrap();
    assert_abs_diff_eq!(keep.bound, 1.0, epsilon = 1e-15);
    let opts = BoundOptions { normalization: Normalization::Normalize, ..Default::default() };
    let norm = carre_bound(&phi, Metric::Kolmogorov, RandomStream::new(1, 0), 0, &opts).unwrap();
    assert!(norm.bound.abs() < 1e-15);
    assert_abs_diff_eq!(norm.scale_factor, 0.5f64.sqrt(), epsilon = 1e-15);
    let opts = BoundOptions { normalization: Normalization::Reject, ..Default::default() };
    assert!(matches!(
        carre_bound(&phi, Metric::Kolmogorov, RandomStream::new(1, 0), 0, &opts),
        Err(Error::Validation(_))
    ));
}

#[test]
fn preconditions() {
    let opts = BoundOptions::default();
    let s = RandomStream::new(1, 0);
    let uncentered = ChaosFunctional::constant(0.5).add(&product01());
    assert!(matches!(carre_bound(&uncentered, Metric::Wasserstein, s, 0, &opts), Err(Error::Precondition(_))));
    assert!(matches!(
        carre_bound(&ChaosFunctional::zero(), Metric::Wasserstein, s, 0, &opts),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn carre_mean_is_variance() {
    for seed in 0..20 {
        let phi = ChaosFunctional::random_sparse(RandomStream::new(seed, 9), 6, 4, 10, true);
        let gamma = carre_functional(&phi).unwrap();
        let var: f64 = phi.terms().values().map(|c| c * c).sum();
        assert!((gamma.mean() - var).abs() <= 1e-12 * var.max(1.0));
    }
}
