//! Stein identities for `W = ψ(Z)` built by Gaussian interpolation.
//!
//! For `E ψ(Z) = 0` one has `E[W f(W)] = E[T(Z) f'(W)]` with
//!
//! ```text
//! T(x) = ∫_0^1 (2√t)^{-1} E[ψ'(x) ψ'(√t x + √(1-t) Z')] dt,
//! ```
//!
//! hence `d(W, Z) ≤ θ E|1 - T(Z)|`. Substituting `t = u²` turns the weight into
//! `du`, so `T` is computed as a smooth Gauss–Legendre integral over `u ∈ [0, 1]`
//! with a Gauss–Hermite inner expectation. For `W = Σ ψ(Z_i)` over independent
//! coordinates the per-coordinate `T`s add up.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::hermite::normalized_he;
use crate::gauss::quadrature::{gauss_hermite_nodes, gauss_legendre, normal_expectation_abs};
use crate::gauss::{QuadratureKind, QuadratureRule, RandomStream};
use crate::hida::{empirical_distance, sample_pairs, BoundReport};
use crate::metric::Metric;

/// Relative agreement required between a rule and its refinement.
pub const STABILITY_TOL: f64 = 1e-8;
/// Highest Hermite degree offered as a builtin.
pub const MAX_HERMITE_DEGREE: usize = 16;

/// Builtin unit-variance, mean-zero shapes `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiKind {
    /// `ψ(x) = x`.
    Identity,
    /// `ψ(x) = (x² - 1)/√2`.
    Chi2,
    /// `ψ(x) = He_k(x)/√(k!)`.
    Hermite { k: usize },
}

impl PsiKind {
    pub fn degree(self) -> usize {
        match self {
            PsiKind::Identity => 1,
            PsiKind::Chi2 => 2,
            PsiKind::Hermite { k } => k,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            PsiKind::Identity => x,
            PsiKind::Chi2 => (x * x - 1.0) / 2f64.sqrt(),
            PsiKind::Hermite { k } => normalized_he(k, x),
        }
    }

    fn deriv(self, x: f64) -> f64 {
        match self {
            PsiKind::Identity => 1.0,
            PsiKind::Chi2 => 2f64.sqrt() * x,
            PsiKind::Hermite { k } => (k as f64).sqrt() * normalized_he(k - 1, x),
        }
    }
}

impl fmt::Display for PsiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiKind::Identity => f.write_str("identity"),
            PsiKind::Chi2 => f.write_str("chi2"),
            PsiKind::Hermite { k } => write!(f, "hermite:{k}"),
        }
    }
}

impl FromStr for PsiKind {
    type Err = Error;

    /// Accepts `identity`, `chi2` and `hermite:k`, optionally prefixed by `builtin:`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("builtin:").unwrap_or(s);
        let kind = match s {
            "identity" => PsiKind::Identity,
            "chi2" => PsiKind::Chi2,
            _ => {
                let k = s
                    .strip_prefix("hermite:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown builtin functional '{s}'")))?;
                if k == 0 || k > MAX_HERMITE_DEGREE {
                    return Err(Error::Capacity(format!("hermite degree {k} outside 1..={MAX_HERMITE_DEGREE}")));
                }
                PsiKind::Hermite { k }
            }
        };
        Ok(kind)
    }
}

/// `ψ = scale · ψ_kind`, a polynomial functional of one Gaussian coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothFunctional {
    pub kind: PsiKind,
    pub scale: f64,
}

impl SmoothFunctional {
    pub fn new(kind: PsiKind) -> Self {
        Self { kind, scale: 1.0 }
    }

    /// The summand `ψ/√n` of `W = Σ_{i ≤ n} ψ(Z_i)/√n`.
    pub fn summand(kind: PsiKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("number of summands must be positive".into()));
        }
        Ok(Self { kind, scale: 1.0 / (n as f64).sqrt() })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale * self.kind.eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.scale * self.kind.deriv(x)
    }

    /// Polynomial degree; certifies the growth of `ψ'`.
    pub fn degree(&self) -> usize {
        self.kind.degree()
    }

    /// `(E ψ(Z), Var ψ(Z))` by Gauss–Hermite quadrature, exact for these
    /// polynomial degrees.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let rule = moment_rule();
        let mean = rule.apply(|z| self.eval(z));
        let second = rule.apply(|z| self.eval(z).powi(2));
        Ok((mean, second - mean * mean))
    }
}

/// 64-point Gauss–Hermite: exact for polynomials up to degree 127, which
/// covers `ψ²`, `T` and `T²` for every builtin.
fn moment_rule() -> QuadratureRule {
    gauss_hermite_nodes(64).expect("valid rule")
}

/// Default rules for [`interp_t`]: 24-point Gauss–Legendre in `u` and
/// 32-point Gauss–Hermite in `Z'`.
pub fn default_rules() -> (QuadratureRule, QuadratureRule) {
    (gauss_legendre(24, 0.0, 1.0).expect("valid rule"), gauss_hermite_nodes(32).expect("valid rule"))
}

fn t_with_rules(psi: &SmoothFunctional, x: f64, rule_u: &QuadratureRule, rule_z: &QuadratureRule) -> f64 {
    let inner = rule_u.apply(|u| {
        let c = (1.0 - u * u).max(0.0).sqrt();
        rule_z.apply(|z| psi.deriv(u * x + c * z))
    });
    psi.deriv(x) * inner
}

fn refine(rule: &QuadratureRule) -> Result<QuadratureRule> {
    let m = rule.len();
    match rule.kind {
        QuadratureKind::GaussLegendre => gauss_legendre(2 * m, 0.0, 1.0),
        QuadratureKind::GaussHermite if m <= 128 => gauss_hermite_nodes(2 * m),
        QuadratureKind::GaussHermite => gauss_hermite_nodes(m / 2),
        QuadratureKind::AdaptiveSimpson => Err(Error::Capability("T(x) needs fixed Gauss rules".into())),
    }
}

/// `T(x)` for the functional `ψ`, with `rule_u` a Gauss–Legendre rule on
/// `[0, 1]` and `rule_z` a Gauss–Hermite rule.
///
/// The value is recomputed with both rules refined; disagreement beyond
/// [`STABILITY_TOL`] (relative to `max(1, |T|)`) is an accuracy error. The
/// refined value is returned.
pub fn interp_t(psi: &SmoothFunctional, x: f64, rule_u: &QuadratureRule, rule_z: &QuadratureRule) -> Result<f64> {
    if rule_u.kind != QuadratureKind::GaussLegendre || rule_z.kind != QuadratureKind::GaussHermite {
        return Err(Error::Capability("T(x) expects a Gauss-Legendre rule in u and a Gauss-Hermite rule in z".into()));
    }
    if rule_u.nodes.iter().any(|&u| !(0.0..=1.0).contains(&u)) {
        return Err(Error::Domain("Gauss-Legendre rule for T(x) must live on [0, 1]".into()));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("T(x) at non-finite x = {x}")));
    }
    let coarse = t_with_rules(psi, x, rule_u, rule_z);
    let fine = t_with_rules(psi, x, &refine(rule_u)?, &refine(rule_z)?);
    let gap = (fine - coarse).abs();
    if !(gap <= STABILITY_TOL * fine.abs().max(1.0)) {
        return Err(Error::Accuracy(format!(
            "T({x}) unstable under node doubling: {coarse} vs {fine} ({} x {} nodes)",
            rule_u.len(),
            rule_z.len()
        )));
    }
    Ok(fine)
}

/// `T` stored as the polynomial it is: for `ψ` of degree `d`, `T` has degree
/// `2d - 2`, so its values at that many Chebyshev nodes (plus one) pin it
/// down. Evaluation is barycentric.
#[derive(Debug, Clone)]
pub struct TPolynomial {
    nodes: Vec<f64>,
    values: Vec<f64>,
    bary: Vec<f64>,
}

/// Half-width of the interval carrying the interpolation nodes.
const T_FIT_RADIUS: f64 = 6.0;

impl TPolynomial {
    pub fn fit(psi: &SmoothFunctional, rule_u: &QuadratureRule, rule_z: &QuadratureRule) -> Result<Self> {
        let degree = 2 * psi.degree() - 2;
        let m = degree + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|k| {
                if m == 1 {
                    0.0
                } else {
                    -T_FIT_RADIUS * (PI * k as f64 / (m - 1) as f64).cos()
                }
            })
            .collect();
        let values = nodes.iter().map(|&x| interp_t(psi, x, rule_u, rule_z)).collect::<Result<Vec<_>>>()?;
        // Barycentric weights for Chebyshev points of the second kind.
        let bary = (0..m)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == m - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let poly = Self { nodes, values, bary };
        // Off-node spot checks guard the degree certificate.
        for &x in &[-6.3, -1.7, 0.45, 2.9, 7.1] {
            let direct = interp_t(psi, x, rule_u, rule_z)?;
            let fitted = poly.eval(x);
            if (direct - fitted).abs() > STABILITY_TOL * direct.abs().max(1.0) {
                return Err(Error::Accuracy(format!("polynomial form of T disagrees at {x}: {fitted} vs {direct}")));
            }
        }
        Ok(poly)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.nodes.len() == 1 {
            return self.values[0];
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xk, &vk), &wk) in self.nodes.iter().zip(&self.values).zip(&self.bary) {
            let d = x - xk;
            if d == 0.0 {
                return vk;
            }
            let c = wk / d;
            num += c * vk;
            den += c;
        }
        num / den
    }
}

/// Closed-form χ² bounds for the standardized `χ²(n)`, all driven by
/// `Var T = 2/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Bounds {
    pub n: usize,
    pub d_w: f64,
    pub d_k: f64,
    pub d_tv: f64,
    pub var_t: f64,
}

/// `d_W ≤ 2/√(πn)`, `d_K ≤ √(2/n)`, `d_TV ≤ 2√(2/n)`.
pub fn chi2_bounds(n: usize) -> Result<Chi2Bounds> {
    if n == 0 {
        return Err(Error::Domain("chi-square degrees of freedom must be positive".into()));
    }
    let var_t = 2.0 / n as f64;
    let sd = var_t.sqrt();
    Ok(Chi2Bounds {
        n,
        d_w: Metric::Wasserstein.theta() * sd,
        d_k: Metric::Kolmogorov.theta() * sd,
        d_tv: Metric::TotalVariation.theta() * sd,
        var_t,
    })
}

/// `W = Σ_{i ≤ n} ψ(Z_i)/√n` for a unit-variance builtin `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFunctional {
    pub psi: PsiKind,
    pub n: usize,
}

impl GaussianFunctional {
    pub fn new(psi: PsiKind, n: usize) -> Result<Self> {
        let g = Self { psi, n };
        let summand = g.summand()?;
        let (mean, var) = summand.moments()?;
        if mean.abs() > 1e-8 {
            return Err(Error::Validation(format!("E psi(Z) = {mean}, expected 0")));
        }
        if (var * n as f64 - 1.0).abs() > 1e-8 {
            return Err(Error::Validation(format!("Var W = {}, expected 1", var * n as f64)));
        }
        Ok(g)
    }

    pub fn summand(&self) -> Result<SmoothFunctional> {
        SmoothFunctional::summand(self.psi, self.n)
    }

    /// `Var T = n · Var T_1(Z)` by quadrature of the per-coordinate `T_1`.
    pub fn var_t(&self, t: &TPolynomial) -> Result<f64> {
        let rule = moment_rule();
        let m1 = rule.apply(|z| t.eval(z));
        let m2 = rule.apply(|z| t.eval(z).powi(2));
        Ok(self.n as f64 * (m2 - m1 * m1))
    }
}

/// `θ E|1 - T|` for `W = Σ ψ(Z_i)/√n`.
///
/// With one coordinate the outer expectation is a kink-aware adaptive
/// quadrature over `Z` and the Monte Carlo value is a cross-check. With
/// several coordinates Monte Carlo is primary. The same draws give the
/// empirical distance of `W` (Wasserstein or Kolmogorov) when `samples > 0`.
pub fn bound_theta_e1mt(
    g: &GaussianFunctional,
    metric: Metric,
    rules: &(QuadratureRule, QuadratureRule),
    stream: RandomStream,
    samples: usize,
) -> Result<BoundReport> {
    let summand = g.summand()?;
    let t = TPolynomial::fit(&summand, &rules.0, &rules.1)?;
    let theta = metric.theta();
    let n = g.n;
    let var_t = g.var_t(&t)?;
    let mean_t = n as f64 * moment_rule().apply(|z| t.eval(z));

    let (mc, values) = sample_pairs(stream.substream(0), n, samples, |z| {
        let w: f64 = z.iter().map(|&x| summand.eval(x)).sum();
        let tt: f64 = z.iter().map(|&x| t.eval(x)).sum();
        (w, (1.0 - tt).abs())
    });
    let (empirical, empirical_se) = empirical_distance(values, metric, stream.substream(1))?;
    let mc_mean = (samples > 0).then(|| mc.mean());

    let (e_abs_dev, method, mc_std_error, cross) = if n == 1 {
        let exact = normal_expectation_abs(&|z| 1.0 - t.eval(z), 1e-13)?;
        (exact, "quadrature", mc.std_error(), mc_mean)
    } else {
        let v = mc_mean.ok_or_else(|| Error::Domain("several coordinates need samples > 0".into()))?;
        (v, "monte-carlo", mc.std_error(), None)
    };
    Ok(BoundReport {
        metric,
        theta,
        bound: theta * e_abs_dev,
        carre_mean: mean_t,
        e_abs_dev,
        mc_std_error,
        samples: samples as u64,
        seed: stream.seed,
        empirical_distance: empirical,
        empirical_std_error: empirical_se,
        method: method.into(),
        mc_e_abs_dev: cross,
        variance_bound: Some(theta * var_t.sqrt()),
        scale_factor: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::std_normal_pdf;

    fn rules() -> (QuadratureRule, QuadratureRule) {
        default_rules()
    }

    #[test]
    fn identity_has_unit_t() {
        let (ru, rz) = rules();
        let psi = SmoothFunctional::new(PsiKind::Identity);
        for &x in &[-3.0, 0.0, 1.5] {
            assert!((interp_t(&psi, x, &ru, &rz).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chi2_summand_t_is_x_squared_over_n() {
        let (ru, rz) = rules();
        for n in [1usize, 3, 10] {
            let psi = SmoothFunctional::summand(PsiKind::Chi2, n).unwrap();
            for i in 0..=20 {
                let x = -4.0 + 0.4 * i as f64;
                let t = interp_t(&psi, x, &ru, &rz).unwrap();
                assert!((t - x * x / n as f64).abs() < 1e-8, "n={n} x={x} t={t}");
            }
        }
    }

    #[test]
    fn wrong_rules_rejected() {
        let (ru, rz) = rules();
        let psi = SmoothFunctional::new(PsiKind::Chi2);
        assert!(matches!(interp_t(&psi, 0.0, &rz, &ru), Err(Error::Capability(_))));
        let tiny = gauss_hermite_nodes(2).unwrap();
        let psi = SmoothFunctional::new(PsiKind::Hermite { k: 6 });
        assert!(matches!(interp_t(&psi, 3.0, &ru, &tiny), Err(Error::Accuracy(_))));
    }

    #[test]
    fn hermite_t_has_mean_equal_to_variance() {
        // E T(Z) = E[ψ(Z) Z]-type identity with f(w) = w: E[W²] = E[T].
        let (ru, rz) = rules();
        for k in 1..=5 {
            let psi = SmoothFunctional::new(PsiKind::Hermite { k });
            let t = TPolynomial::fit(&psi, &ru, &rz).unwrap();
            let mean = moment_rule().apply(|z| t.eval(z));
            assert!((mean - 1.0).abs() < 1e-9, "k={k} mean={mean}");
        }
    }

    #[test]
    fn chi2_bound_values() {
        let b = chi2_bounds(100).unwrap();
        assert!((b.d_w - 2.0 / (PI.sqrt() * 10.0)).abs() < 1e-15);
        assert!((b.d_k - 2f64.sqrt() / 10.0).abs() < 1e-15);
        let b1 = chi2_bounds(1).unwrap();
        assert!((b1.d_w - 2.0 / PI.sqrt()).abs() < 1e-15);
        assert!((b1.d_tv - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let b4 = chi2_bounds(4).unwrap();
        assert_eq!(b4.d_w * 2.0, b1.d_w);
        assert_eq!(b4.d_k * 2.0, b1.d_k);
        assert!(chi2_bounds(0).is_err());
    }

    #[test]
    fn var_t_adds_across_coordinates() {
        let (ru, rz) = rules();
        for n in [1usize, 5, 50] {
            let g = GaussianFunctional::new(PsiKind::Chi2, n).unwrap();
            let t = TPolynomial::fit(&g.summand().unwrap(), &ru, &rz).unwrap();
            assert!((g.var_t(&t).unwrap() - 2.0 / n as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn single_chi2_bound_matches_closed_form() {
        let g = GaussianFunctional::new(PsiKind::Chi2, 1).unwrap();
        let r = bound_theta_e1mt(&g, Metric::Wasserstein, &rules(), RandomStream::new(5, 0), 0).unwrap();
        let e = 4.0 * std_normal_pdf(1.0);
        assert!((r.bound - (2.0 / PI).sqrt() * e).abs() < 1e-6);
        let r = bound_theta_e1mt(&g, Metric::TotalVariation, &rules(), RandomStream::new(5, 0), 0).unwrap();
        assert!((r.bound - 8.0 * std_normal_pdf(1.0)).abs() < 1e-6);
    }

    #[test]
    fn identity_bound_is_zero() {
        let g = GaussianFunctional::new(PsiKind::Identity, 3).unwrap();
        for metric in Metric::ALL {
            let r = bound_theta_e1mt(&g, metric, &rules(), RandomStream::new(1, 0), 1000).unwrap();
            assert!(r.bound.abs() < 1e-12);
        }
    }

    #[test]
    fn psi_parsing() {
        assert_eq!("builtin:chi2".parse::<PsiKind>().unwrap(), PsiKind::Chi2);
        assert_eq!("hermite:3".parse::<PsiKind>().unwrap(), PsiKind::Hermite { k: 3 });
        assert!("hermite:0".parse::<PsiKind>().is_err());
        assert!("x^2".parse::<PsiKind>().is_err());
        assert_eq!(PsiKind::Hermite { k: 4 }.to_string().parse::<PsiKind>().unwrap(), PsiKind::Hermite { k: 4 });
    }
}
