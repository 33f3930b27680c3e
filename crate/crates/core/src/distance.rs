//! Distances between a law and the standard normal: Wasserstein and
//! Kolmogorov from samples, total variation from a known density.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::normal::{cdf_integral, cdf_integral_lower, normal_cdf, normal_quantile, sf_integral_upper, std_normal_pdf};
use crate::gauss::quadrature::{integrate_pieces, sign_changes, NORMAL_WINDOW};
use crate::gauss::rng::RandomStream;
use crate::metric::Metric;

/// A finite sample of real values, sorted on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty sample".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample contains non-finite value {bad}")));
        }
        values.par_sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(Self { values })
    }

    /// Parses one real per line; blank lines and `#` comments are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let field = line.split('#').next().unwrap_or("").trim();
            if field.is_empty() {
                continue;
            }
            let field = field.split(',').next().unwrap_or("").trim();
            let v: f64 = field
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: '{field}': {e}", lineno + 1)))?;
            values.push(v);
        }
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in ascending order.
    pub fn sorted_values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub method: String,
}

impl fmt::Display for DistanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.metric, self.estimate)?;
        if let Some(se) = self.std_error {
            write!(f, " (se {se})")?;
        }
        Ok(())
    }
}

/// `∫_a^b |c - Φ(t)| dt` for `a ≤ b`, split at `Φ^{-1}(c)` when it falls inside.
fn abs_gap_integral(c: f64, a: f64, b: f64, cdf_a: f64, cdf_b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if c <= cdf_a {
        cdf_integral(a, b) - c * (b - a)
    } else if c >= cdf_b {
        c * (b - a) - cdf_integral(a, b)
    } else {
        let q = normal_quantile(c).clamp(a, b);
        (c * (q - a) - cdf_integral(a, q)) + (cdf_integral(q, b) - c * (b - q))
    }
}

/// `∫ |F(t) - Φ(t)| dt` for the step function `F` that jumps to `levels[i]`
/// at `points[i]` (ascending, last level 1).
fn wasserstein_steps(points: &[f64], levels: &[f64]) -> f64 {
    let n = points.len();
    let cdfs: Vec<f64> = points.iter().map(|&x| normal_cdf(x)).collect();
    let mut total = cdf_integral_lower(points[0]);
    let mut comp = 0.0;
    for i in 0..n - 1 {
        let piece = abs_gap_integral(levels[i], points[i], points[i + 1], cdfs[i], cdfs[i + 1]);
        // Neumaier summation; n can be in the millions.
        let t = total + piece;
        comp += if total.abs() >= piece.abs() { (total - t) + piece } else { (piece - t) + total };
        total = t;
    }
    total + comp + sf_integral_upper(points[n - 1])
}

fn kolmogorov_steps(points: &[f64], levels: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut d = 0.0f64;
    for (&x, &c) in points.iter().zip(levels) {
        let p = normal_cdf(x);
        d = d.max((c - p).abs()).max((p - prev).abs());
        prev = c;
    }
    d.min(1.0)
}

fn empirical_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

/// `d_W(F_n, Φ) = ∫ |F_n(t) - Φ(t)| dt`, integrated exactly piece by piece
/// between order statistics.
pub fn wasserstein_to_normal(s: &SampleSet) -> Result<DistanceReport> {
    if s.len() < 2 {
        return Err(Error::Domain("Wasserstein distance needs at least two sample points".into()));
    }
    let x = s.sorted_values();
    Ok(DistanceReport {
        metric: Metric::Wasserstein,
        estimate: wasserstein_steps(x, &empirical_levels(x.len())),
        std_error: None,
        method: "exact piecewise integral of |F_n - Phi|".into(),
    })
}

/// One-sample Kolmogorov–Smirnov statistic against Φ.
pub fn kolmogorov_to_normal(s: &SampleSet) -> Result<DistanceReport> {
    let x = s.sorted_values();
    Ok(DistanceReport {
        metric: Metric::Kolmogorov,
        estimate: kolmogorov_steps(x, &empirical_levels(x.len())),
        std_error: None,
        method: "one-sample KS statistic".into(),
    })
}

/// Sample distance for `metric`; total variation is refused because it is
/// not consistently estimable from raw samples.
pub fn sample_distance(s: &SampleSet, metric: Metric) -> Result<DistanceReport> {
    match metric {
        Metric::Wasserstein => wasserstein_to_normal(s),
        Metric::Kolmogorov => kolmogorov_to_normal(s),
        Metric::TotalVariation => Err(Error::Capability(
            "total variation needs a density; it is not estimated from samples".into(),
        )),
    }
}

/// Bootstrap standard error of the sample distance.
///
/// Replicate `r` resamples with replacement using uniform draws of
/// `stream.substream(r)`; replicates run in parallel and are combined in
/// index order.
pub fn bootstrap_std_error(s: &SampleSet, metric: Metric, replicates: usize, stream: RandomStream) -> Result<f64> {
    if metric == Metric::TotalVariation {
        return sample_distance(s, metric).map(|_| 0.0);
    }
    if replicates < 2 {
        return Err(Error::Domain("bootstrap needs at least two replicates".into()));
    }
    let x = s.sorted_values();
    let n = x.len();
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut counts = vec![0u32; n];
            let mut reader = stream.substream(r as u64).reader(0);
            for _ in 0..n {
                let idx = ((reader.next_unit() * n as f64) as usize).min(n - 1);
                counts[idx] += 1;
            }
            let mut points = Vec::with_capacity(n);
            let mut levels = Vec::with_capacity(n);
            let mut cum = 0u64;
            for (i, &c) in counts.iter().enumerate() {
                if c > 0 {
                    cum += c as u64;
                    points.push(x[i]);
                    levels.push(cum as f64 / n as f64);
                }
            }
            match metric {
                Metric::Wasserstein if points.len() >= 2 => wasserstein_steps(&points, &levels),
                Metric::Wasserstein => cdf_integral_lower(points[0]) + sf_integral_upper(points[0]),
                _ => kolmogorov_steps(&points, &levels),
            }
        })
        .collect();
    let mean = stats.iter().sum::<f64>() / replicates as f64;
    let var = stats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    Ok(var.sqrt())
}

/// A one-dimensional probability density with known support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    StandardNormal,
    /// Law of `Z + delta`.
    ShiftedNormal { delta: f64 },
    /// Law of `(χ²_n - n) / √(2n)`.
    StandardizedChiSquare { n: u32 },
}

impl Density {
    pub fn pdf(&self, t: f64) -> f64 {
        match *self {
            Density::StandardNormal => std_normal_pdf(t),
            Density::ShiftedNormal { delta } => std_normal_pdf(t - delta),
            Density::StandardizedChiSquare { n } => {
                let nf = n as f64;
                let scale = (2.0 * nf).sqrt();
                let x = nf + scale * t;
                if x <= 0.0 {
                    return 0.0;
                }
                let k = 0.5 * nf;
                let log_pdf = (k - 1.0) * x.ln() - 0.5 * x - k * 2f64.ln() - libm::lgamma(k);
                scale * log_pdf.exp()
            }
        }
    }

    /// Interval outside which the density carries less than ~1e-15 mass.
    pub fn integration_range(&self) -> (f64, f64) {
        match *self {
            Density::StandardNormal => (-NORMAL_WINDOW, NORMAL_WINDOW),
            Density::ShiftedNormal { delta } => (delta - NORMAL_WINDOW, delta + NORMAL_WINDOW),
            Density::StandardizedChiSquare { n } => {
                let nf = n as f64;
                let lo = -(nf / 2.0).sqrt();
                (lo, (20.0 + 80.0 / (2.0 * nf).sqrt()).max(NORMAL_WINDOW))
            }
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Density::StandardizedChiSquare { n } => vec![-(n as f64 / 2.0).sqrt()],
            _ => Vec::new(),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Density::StandardNormal => "standard normal".into(),
            Density::ShiftedNormal { delta } => format!("N({delta}, 1)"),
            Density::StandardizedChiSquare { n } => format!("standardized chi2({n})"),
        }
    }
}

/// Absolute tolerance of the total-variation quadrature.
pub const TV_TOLERANCE: f64 = 1e-8;
/// Allowed deviation of `∫ p` from one.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// `d_TV = ½ ∫ |p(t) - φ(t)| dt` by adaptive quadrature split at the
/// crossings of `p` and `φ`.
pub fn tv_to_normal_density(p: &Density) -> Result<DistanceReport> {
    let (lo, hi) = p.integration_range();
    let estimate = match *p {
        // The χ²₁ density blows up like 1/√(t - lo); t = lo + s² removes it.
        Density::StandardizedChiSquare { n: 1 } => {
            let q = |s: f64| 2.0 * s * p.pdf(lo + s * s);
            let r = |s: f64| 2.0 * s * std_normal_pdf(lo + s * s);
            let outside = normal_cdf(lo) + normal_cdf(-hi);
            abs_diff_integral(&q, &r, 0.0, (hi - lo).sqrt(), &[], outside)?
        }
        _ => tv_distance(&|t| p.pdf(t), lo, hi, &p.breakpoints())?,
    };
    Ok(DistanceReport {
        metric: Metric::TotalVariation,
        estimate,
        std_error: None,
        method: format!("adaptive quadrature of |p - phi| for {}", p.name()),
    })
}

/// Total variation distance between the density `pdf` (zero outside
/// `[lo, hi]`) and the standard normal.
pub fn tv_distance<F: Fn(f64) -> f64 + Sync>(pdf: &F, lo: f64, hi: f64, breaks: &[f64]) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty support [{lo}, {hi}]")));
    }
    // Normal mass outside the support, where p vanishes.
    let outside = normal_cdf(lo) + normal_cdf(-hi);
    abs_diff_integral(pdf, &std_normal_pdf, lo, hi, breaks, outside)
}

/// `½ (∫ |q - r| + outside)` after checking that `q` carries unit mass.
fn abs_diff_integral<F, G>(q: &F, r: &G, lo: f64, hi: f64, breaks: &[f64], outside: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    let mass = integrate_pieces(q, lo, hi, breaks, 1e-12)?;
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Validation(format!("density integrates to {mass}, not 1")));
    }
    let diff = |t: f64| q(t) - r(t);
    let mut cuts = sign_changes(&diff, lo, hi, 4000);
    cuts.extend_from_slice(breaks);
    // Integrated 1000x tighter than the reported tolerance.
    let inside = integrate_pieces(&|t: f64| diff(t).abs(), lo, hi, &cuts, 1e-3 * TV_TOLERANCE)?;
    Ok((0.5 * (inside + outside)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn point_mass_at_zero() {
        let s = SampleSet::new(vec![0.0; 7]).unwrap();
        let w = wasserstein_to_normal(&s).unwrap().estimate;
        assert!((w - (2.0 / PI).sqrt()).abs() < 1e-12);
        let s1 = SampleSet::new(vec![0.0]).unwrap();
        assert_eq!(kolmogorov_to_normal(&s1).unwrap().estimate, 0.5);
    }

    #[test]
    fn far_tail_mass() {
        let s = SampleSet::new(vec![1e6]).unwrap();
        assert!((kolmogorov_to_normal(&s).unwrap().estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_non_finite_rejected() {
        assert!(matches!(SampleSet::new(vec![]), Err(Error::Domain(_))));
        assert!(matches!(SampleSet::new(vec![1.0, f64::NAN]), Err(Error::Domain(_))));
        let single = SampleSet::new(vec![0.3]).unwrap();
        assert!(wasserstein_to_normal(&single).is_err());
    }

    #[test]
    fn csv_parsing() {
        let s = SampleSet::from_csv_str("# header comment\n0.5\n\n-1.25\n3e-1, ignored\n").unwrap();
        assert_eq!(s.sorted_values(), &[-1.25, 0.3, 0.5]);
        let err = SampleSet::from_csv_str("1.0\nabc\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn total_variation_refused_for_samples() {
        let s = SampleSet::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(sample_distance(&s, Metric::TotalVariation), Err(Error::Capability(_))));
    }

    #[test]
    fn tv_identical_law_is_zero() {
        let r = tv_to_normal_density(&Density::StandardNormal).unwrap();
        assert!(r.estimate.abs() < 1e-10);
    }

    #[test]
    fn tv_shifted_normal_closed_form() {
        // ½∫|φ(t-δ) - φ(t)| dt = Φ(δ/2) - Φ(-δ/2).
        let delta = 0.1;
        let r = tv_to_normal_density(&Density::ShiftedNormal { delta }).unwrap();
        let exact = normal_cdf(delta / 2.0) - normal_cdf(-delta / 2.0);
        assert!((r.estimate - exact).abs() < 1e-10);
    }

    #[test]
    fn unnormalized_density_rejected() {
        let err = tv_distance(&|t: f64| 2.0 * std_normal_pdf(t), -14.0, 14.0, &[]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn chi_square_density_normalized() {
        for n in [3u32, 4, 10, 100, 1000] {
            let d = Density::StandardizedChiSquare { n };
            let (lo, hi) = d.integration_range();
            let mass = integrate_pieces(&|t| d.pdf(t), lo, hi, &[], 1e-13).unwrap();
            assert!((mass - 1.0).abs() < 1e-10, "n={n} mass={mass}");
        }
    }

    #[test]
    fn tv_chi_square_one_matches_cdf_oracle() {
        // TV = Σ over {p > φ} of P(A) - Φ(A), with P(χ²₁ ≤ x) = erf(√(x/2)).
        let d = Density::StandardizedChiSquare { n: 1 };
        let lo = -(0.5f64).sqrt();
        let cdf = |t: f64| if t <= lo { 0.0 } else { libm::erf(((1.0 + 2f64.sqrt() * t) / 2.0).sqrt()) };
        let diff = |t: f64| d.pdf(t) - std_normal_pdf(t);
        let roots = sign_changes(&diff, lo + 1e-9, 30.0, 20000);
        let mut edges = vec![lo];
        edges.extend(roots);
        edges.push(f64::INFINITY);
        let mut oracle = 0.0;
        for w in edges.windows(2) {
            let mid = if w[1].is_finite() { 0.5 * (w[0] + w[1]) } else { w[0] + 1.0 };
            if diff(mid) > 0.0 {
                let hi_cdf = if w[1].is_finite() { cdf(w[1]) } else { 1.0 };
                oracle += hi_cdf - cdf(w[0]) - (normal_cdf(w[1]) - normal_cdf(w[0]));
            }
        }
        let r = tv_to_normal_density(&d).unwrap();
        assert!((r.estimate - oracle).abs() < 1e-8, "{} vs {oracle}", r.estimate);
    }
}
