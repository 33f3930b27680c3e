use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use stein_chaos::gauss::quadrature::{integrate, integrate_pieces};
use stein_chaos::gauss::{
    gauss_hermite_nodes, gauss_legendre, hermite_fn, sample_std_normal, std_normal_cdf, std_normal_pdf,
    std_normal_quantile, HermiteBasis, RandomStream,
};

/// Physicists' Hermite polynomial coefficients by the exact integer recurrence
/// `H_{n+1} = 2t H_n - 2n H_{n-1}`.
fn hermite_coeffs(n: usize) -> Vec<i128> {
    let mut prev = vec![1i128];
    let mut cur = vec![0i128, 2];
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let mut next = vec![0i128; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= 2 * k as i128 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn hermite_function_oracle(n: usize, t: f64) -> f64 {
    let h: f64 = hermite_coeffs(n).iter().rev().fold(0.0, |acc, &c| acc * t + c as f64);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let norm = (std::f64::consts::PI.sqrt() * 2f64.powi(n as i32) * fact).sqrt();
    h * (-0.5 * t * t).exp() / norm
}

#[test]
fn cdf_matches_integrated_density() {
    for &w in &[-6.0, -1.0, 0.0, 0.3, 1.0, 2.5] {
        let lower = integrate(&std_normal_pdf, -40.0, w, 1e-15).unwrap();
        assert_abs_diff_eq!(std_normal_cdf(w).unwrap(), lower, epsilon = 1e-13);
    }
    // Far tail keeps relative precision.
    let tail = integrate(&std_normal_pdf, -60.0, -20.0, 1e-100).unwrap();
    let phi = std_normal_cdf(-20.0).unwrap();
    assert!(((phi - tail) / tail).abs() < 1e-10);
}

#[test]
fn cdf_rejects_non_finite() {
    assert!(std_normal_cdf(f64::NAN).is_err());
    assert!(std_normal_quantile(0.0).is_err());
    assert!(std_normal_quantile(1.0).is_err());
}

#[test]
fn hermite_functions_match_integer_polynomials() {
    for n in 0..=12 {
        for &t in &[-3.7, -1.0, -0.2, 0.0, 0.5, 1.9, 4.2] {
            let want = hermite_function_oracle(n, t);
            let got = hermite_fn(n, t).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "n={n} t={t}: {got} vs {want}");
        }
    }
    assert!(hermite_fn(65, 0.0).is_err());
}

#[test]
fn hermite_functions_orthonormal() {
    let basis = HermiteBasis::new(20);
    for m in 0..=20 {
        for n in m..=20 {
            let g = |t: f64| basis.eval(m, t).unwrap() * basis.eval(n, t).unwrap();
            let breaks: Vec<f64> = (-12..=12).map(f64::from).collect();
            let ip = integrate_pieces(&g, -30.0, 30.0, &breaks, 1e-13).unwrap();
            let want = if m == n { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(ip, want, epsilon = 1e-10);
        }
    }
}

#[test]
fn hermite_functions_are_eigenfunctions() {
    // (-d²/dt² + t² + 1) h_n = (2n + 2) h_n, second derivative by central differences.
    let step = 1e-4;
    for n in [0, 1, 5, 12] {
        for &t in &[-2.0, -0.4, 0.7, 3.1] {
            let h = |x: f64| hermite_fn(n, x).unwrap();
            let d2 = (h(t + step) - 2.0 * h(t) + h(t - step)) / (step * step);
            let lhs = -d2 + (t * t + 1.0) * h(t);
            assert_abs_diff_eq!(lhs, HermiteBasis::eigenvalue(n) * h(t), epsilon = 1e-5);
        }
    }
}

#[test]
fn gauss_hermite_moments() {
    let r = gauss_hermite_nodes(32).unwrap();
    assert_abs_diff_eq!(r.apply(|_| 1.0), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(r.apply(|z| z * z), 1.0, epsilon = 1e-13);
    assert_abs_diff_eq!(r.apply(|z| z.powi(4)), 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.apply(|z| z.powi(10)), 945.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.apply(|z| z.powi(7)), 0.0, epsilon = 1e-12);
    // E cos Z = e^{-1/2}.
    assert_abs_diff_eq!(r.apply(f64::cos), (-0.5f64).exp(), epsilon = 1e-14);
}

#[test]
fn gauss_legendre_exact_for_polynomials() {
    let r = gauss_legendre(24, 0.0, 1.0).unwrap();
    for k in 0..=47 {
        let exact = 1.0 / (k as f64 + 1.0);
        assert_abs_diff_eq!(r.apply(|u| u.powi(k)), exact, epsilon = 1e-14);
    }
}

#[test]
fn sample_moments_and_correlation() {
    let z = sample_std_normal(RandomStream::new(17, 0), 400_000);
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let lag1 = z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1.0);
    // Five standard errors.
    assert!(mean.abs() < 5.0 / n.sqrt());
    assert!((var - 1.0).abs() < 5.0 * 2f64.sqrt() / n.sqrt());
    assert!(lag1.abs() < 5.0 / n.sqrt());
    let other = sample_std_normal(RandomStream::new(17, 0).substream(3), 400_000);
    let cross = z.iter().zip(&other).map(|(a, b)| a * b).sum::<f64>() / n;
    assert!(cross.abs() < 5.0 / n.sqrt());
}

#[test]
fn sample_quantiles() {
    let mut z = sample_std_normal(RandomStream::new(23, 1), 200_000);
    z.sort_by(f64::total_cmp);
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let q = z[(p * z.len() as f64) as usize];
        // Quantile standard error √(p(1-p)/n) / φ(q).
        let se = (p * (1.0 - p) / z.len() as f64).sqrt() / std_normal_pdf(q);
        assert!((q - std_normal_quantile(p).unwrap()).abs() < 5.0 * se);
    }
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let w = std_normal_quantile(p).unwrap();
        let back = std_normal_cdf(w).unwrap();
        prop_assert!((back - p).abs() <= 1e-13 * p.min(1.0 - p).max(1e-3));
    }

    #[test]
    fn cdf_symmetry(w in -30.0f64..30.0) {
        let s = std_normal_cdf(w).unwrap() + std_normal_cdf(-w).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_all_agrees_with_single(t in -8.0f64..8.0) {
        let basis = HermiteBasis::new(30);
        let all = basis.eval_all(t);
        for (n, v) in all.iter().enumerate() {
            prop_assert_eq!(*v, basis.eval(n, t).unwrap());
        }
    }
}
