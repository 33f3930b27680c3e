//! Quadrature rules: Gauss–Hermite for Gaussian expectations, Gauss–Legendre
//! for finite intervals, and adaptive integrators for integrands with kinks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::normal::std_normal_pdf;
use crate::error::{Error, Result};

pub const MAX_GAUSS_HERMITE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    GaussHermite,
    GaussLegendre,
    AdaptiveSimpson,
}

/// A fixed rule `∫ f dμ ≈ Σ w_k f(x_k)`.
///
/// For [`QuadratureKind::GaussHermite`] the measure is the standard normal
/// law, so weights sum to one. Adaptive rules carry no nodes; they are
/// described by their absolute tolerance only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub target_abs_tol: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the fixed rule to `f`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn adaptive_simpson(target_abs_tol: f64) -> Self {
        Self { kind: QuadratureKind::AdaptiveSimpson, nodes: Vec::new(), weights: Vec::new(), target_abs_tol }
    }
}

/// Gauss–Hermite rule for the standard normal weight:
/// `∫ f(z) φ(z) dz ≈ Σ w_k f(z_k)`, exact for polynomials of degree `≤ 2m - 1`.
pub fn gauss_hermite_nodes(m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > MAX_GAUSS_HERMITE_NODES {
        return Err(Error::Capacity(format!(
            "Gauss-Hermite node count {m} outside 1..={MAX_GAUSS_HERMITE_NODES}"
        )));
    }
    // Positive roots of the physicists' H_m are bracketed by scanning the
    // Hermite function h_m (no overflow), bisected, then polished by Newton
    // on the orthonormal polynomial recurrence. Weights use its derivative.
    let pim4 = PI.powf(-0.25);
    let mf = m as f64;
    let mut buf = vec![0.0; m + 1];
    let mut hm = |t: f64| {
        super::hermite::fill_hermite_functions(t, &mut buf);
        buf[m]
    };
    let step = 0.1 * PI / (2.0 * mf + 1.0).sqrt();
    let upper = (2.0 * mf + 1.0).sqrt() + 2.0;
    let mut positive = Vec::with_capacity(m / 2);
    let mut t0 = if m % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut v0 = hm(t0);
    while t0 < upper && positive.len() < m / 2 {
        let t1 = t0 + step;
        let v1 = hm(t1);
        if v0 * v1 < 0.0 {
            let (mut lo, mut hi, mut vlo) = (t0, t1, v0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let vm = hm(mid);
                if (vm < 0.0) == (vlo < 0.0) {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            positive.push(0.5 * (lo + hi));
        }
        t0 = t1;
        v0 = v1;
    }
    if positive.len() != m / 2 {
        return Err(Error::Accuracy(format!("Gauss-Hermite: found {} of {} positive roots", positive.len(), m / 2)));
    }
    let mut x = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    let mut push_root = |mut z: f64| {
        for _ in 0..3 {
            let (p, dp) = orthonormal_hermite_and_derivative(m, z, pim4);
            if dp == 0.0 || !dp.is_finite() {
                break;
            }
            z -= p / dp;
        }
        let (_, dp) = orthonormal_hermite_and_derivative(m, z, pim4);
        x.push(z);
        w.push(2.0 / (dp * dp));
    };
    for &r in positive.iter().rev() {
        push_root(-r);
    }
    if m % 2 == 1 {
        push_root(0.0);
    }
    for &r in &positive {
        push_root(r);
    }
    let scale = 2f64.sqrt();
    let norm = PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|&v| v * scale).collect();
    let weights: Vec<f64> = w.iter().map(|&v| v / norm).collect();
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok(QuadratureRule { kind: QuadratureKind::GaussHermite, nodes, weights, target_abs_tol: 0.0 })
}

fn orthonormal_hermite_and_derivative(m: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * m as f64).sqrt() * p2)
}

/// Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if m == 0 || m > 1024 {
        return Err(Error::Capacity(format!("Gauss-Legendre node count {m} outside 1..=1024")));
    }
    let mf = m as f64;
    let xm = 0.5 * (b + a);
    let xl = 0.5 * (b - a);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (p1, dp) = legendre_and_derivative(m, z);
            pp = dp;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                pp = legendre_and_derivative(m, z).1;
                break;
            }
        }
        nodes[i] = xm - xl * z;
        nodes[m - 1 - i] = xm + xl * z;
        weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        weights[m - 1 - i] = weights[i];
    }
    Ok(QuadratureRule { kind: QuadratureKind::GaussLegendre, nodes, weights, target_abs_tol: 0.0 })
}

fn legendre_and_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    (p1, m as f64 * (z * p1 - p2) / (z * z - 1.0))
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Accuracy(format!("adaptive Simpson: recursion limit on [{a}, {b}]")));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Returns the Kronrod estimate, the Gauss–Kronrod difference and the
/// Kronrod estimate of `∫|f|`.
fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS_K[7] * fc;
    let mut gauss = GK_WEIGHTS_G[3] * fc;
    let mut abs = GK_WEIGHTS_K[7] * fc.abs();
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let (fl, fr) = (f(c - dx), f(c + dx));
        let s = fl + fr;
        kronrod += GK_WEIGHTS_K[i] * s;
        abs += GK_WEIGHTS_K[i] * (fl.abs() + fr.abs());
        if i % 2 == 1 {
            gauss += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

/// Globally adaptive 15-point Gauss–Kronrod integration on a finite
/// interval.
///
/// The subinterval with the largest error estimate is bisected until the
/// summed estimate meets `tol` (or sits at the round-off floor). The
/// partition is summed left to right, so results are reproducible bit for
/// bit.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    if a == b {
        return Ok(0.0);
    }
    let piece = |a: f64, b: f64| {
        let (value, err, abs) = gauss_kronrod_15(f, a, b);
        // Below ~50 ulp of ∫|f| the difference is round-off, not truncation.
        let err = if err <= 50.0 * f64::EPSILON * abs { 0.0 } else { err };
        Piece { a, b, value, err }
    };
    let mut pieces = vec![piece(a, b)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.err).sum();
        if total_err <= tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Accuracy(format!(
                "Gauss-Kronrod on [{a}, {b}]: error estimate {total_err:e} above {tol:e} after {MAX_INTERVALS} intervals"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a.min(p.b) && m < p.a.max(p.b)) {
            // Interval cannot be split further; accept its estimate.
            pieces.push(Piece { err: 0.0, ..p });
            continue;
        }
        pieces.push(piece(p.a, m));
        pieces.push(piece(m, p.b));
    }
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(pieces.iter().map(|p| p.value).sum())
}

/// [`integrate`] over consecutive pieces separated by `breaks` (which must
/// lie inside `[a, b]`; they are sorted and deduplicated here).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(a);
    edges.extend(points);
    edges.push(b);
    let share = tol / (edges.len() - 1) as f64;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += integrate(f, pair[0], pair[1], share)?;
    }
    Ok(total)
}

/// Half-width of the window outside which standard normal mass is
/// negligible (`Φ(-14) ≈ 8e-45`).
pub const NORMAL_WINDOW: f64 = 14.0;

/// Sign changes of `f` on `[a, b]`, located by a uniform scan with
/// `scan_points` cells followed by bisection to machine precision.
pub fn sign_changes<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, scan_points: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (b - a) / scan_points as f64;
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=scan_points {
        let x1 = if i == scan_points { b } else { a + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// `E|f(Z)|` for continuous `f` and `Z ~ N(0,1)`.
///
/// The kinks of `|f|` are located as sign changes of `f`, and `f φ` is
/// integrated piecewise between them, so no quadrature panel straddles a kink.
pub fn normal_expectation_abs<F: Fn(f64) -> f64>(f: &F, tol: f64) -> Result<f64> {
    let roots = sign_changes(f, -NORMAL_WINDOW, NORMAL_WINDOW, 2800);
    let g = |z: f64| f(z).abs() * std_normal_pdf(z);
    integrate_pieces(&g, -NORMAL_WINDOW, NORMAL_WINDOW, &roots, tol)
}

/// `E f(Z)` for `Z ~ N(0,1)` by adaptive integration on the normal window,
/// split at the given breakpoints.
pub fn normal_expectation<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> Result<f64> {
    let g = |z: f64| f(z) * std_normal_pdf(z);
    integrate_pieces(&g, -NORMAL_WINDOW, NORMAL_WINDOW, breaks, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_rule() {
        let r = gauss_hermite_nodes(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn node_count_limits() {
        assert!(matches!(gauss_hermite_nodes(0), Err(Error::Capacity(_))));
        assert!(matches!(gauss_hermite_nodes(257), Err(Error::Capacity(_))));
        assert!(gauss_hermite_nodes(256).is_ok());
    }

    #[test]
    fn weights_and_second_moment() {
        for m in [1usize, 2, 3, 5, 8, 16, 32, 64, 100, 128, 200, 256] {
            let r = gauss_hermite_nodes(m).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14, "m={m} sum={sum}");
            if m >= 2 {
                let second = r.apply(|z| z * z);
                assert!((second - 1.0).abs() < 1e-12, "m={m} second={second}");
            }
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]), "m={m} nodes not increasing");
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10, 0.0, 2.0).unwrap();
        // ∫_0^2 x^19 dx = 2^20 / 20.
        let v = r.apply(|x| x.powi(19));
        assert!((v / (2f64.powi(20) / 20.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_and_kronrod_agree() {
        let f = |x: f64| (x.sin() * x).exp();
        let s = adaptive_simpson(&f, 0.0, 3.0, 1e-12).unwrap();
        let k = integrate(&f, 0.0, 3.0, 1e-13).unwrap();
        assert!((s - k).abs() < 1e-10);
    }

    #[test]
    fn expectation_abs_of_chi_square_term() {
        // E|1 - Z²| = 4 φ(1).
        let v = normal_expectation_abs(&|z: f64| 1.0 - z * z, 1e-13).unwrap();
        assert!((v - 4.0 * std_normal_pdf(1.0)).abs() < 1e-12);
    }
}
