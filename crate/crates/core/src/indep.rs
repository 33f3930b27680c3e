//! Sums `W = Σ X_i` of independent centered summands with `Var W = 1`.
//!
//! For each summand the Stein kernel
//! `K_i(t) = E[X_i (I(X_i > t > 0) - I(X_i < t < 0))]` is non-negative with
//! `∫ K_i = σ_i²` and `∫ |t| K_i(t) dt = E|X_i|³ / 2`; these two facts give
//! the Wasserstein bound `d_W(W, Z) ≤ 3 Σ E|X_i|³`.

use serde::{Deserialize, Serialize};

use crate::distance::SampleSet;
use crate::error::{Error, Result};
use crate::gauss::normal::{normal_cdf, std_normal_pdf};
use crate::gauss::quadrature::integrate_pieces;
use crate::gauss::rng::{fill_blocks, RandomStream};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Law of one centered summand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DistSpec {
    /// `±scale` with probability 1/2 each.
    Rademacher { scale: f64 },
    /// Uniform on `(-half_width, half_width)`.
    Uniform { half_width: f64 },
    /// Finite law on `points` with probabilities `probs`.
    Discrete { points: Vec<f64>, probs: Vec<f64> },
    /// `scale · (Z² - 1)` with `Z ~ N(0, 1)`.
    ScaledChi2Term { scale: f64 },
}

/// `E|Z² - 1|³ = 8 + 2 ∫_{-1}^{1} (1 - z²)³ φ(z) dz`.
fn chi2_term_abs3() -> f64 {
    // Truncated moments M_k = ∫_{-1}^{1} z^k φ satisfy M_k = -2φ(1) + (k-1) M_{k-2}.
    let m0 = 2.0 * normal_cdf(1.0) - 1.0;
    let m2 = -2.0 * std_normal_pdf(1.0) + m0;
    let m4 = -2.0 * std_normal_pdf(1.0) + 3.0 * m2;
    let m6 = -2.0 * std_normal_pdf(1.0) + 5.0 * m4;
    8.0 + 2.0 * (m0 - 3.0 * m2 + 3.0 * m4 - m6)
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            DistSpec::Rademacher { scale } => positive("rademacher scale", *scale),
            DistSpec::Uniform { half_width } => positive("uniform half_width", *half_width),
            DistSpec::ScaledChi2Term { scale } => positive("chi2 term scale", *scale),
            DistSpec::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::Validation("discrete law needs equally many points and probs".into()));
                }
                if points.iter().chain(probs).any(|v| !v.is_finite()) || probs.iter().any(|&p| p < 0.0) {
                    return Err(Error::Validation("discrete law has invalid points or probabilities".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Validation(format!("discrete probabilities sum to {total}")));
                }
                let mean: f64 = points.iter().zip(probs).map(|(x, p)| x * p).sum();
                if mean.abs() > 1e-12 {
                    return Err(Error::Validation(format!("discrete law has mean {mean}, expected 0")));
                }
                positive("discrete variance", self.var())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistSpec::Discrete { points, probs } => points.iter().zip(probs).map(|(x, p)| x * p).sum(),
            _ => 0.0,
        }
    }

    /// `σ² = E X²`.
    pub fn var(&self) -> f64 {
        match self {
            DistSpec::Rademacher { scale } => scale * scale,
            DistSpec::Uniform { half_width } => half_width * half_width / 3.0,
            DistSpec::Discrete { points, probs } => points.iter().zip(probs).map(|(x, p)| p * x * x).sum(),
            DistSpec::ScaledChi2Term { scale } => 2.0 * scale * scale,
        }
    }

    /// `E|X|`.
    pub fn abs1(&self) -> f64 {
        match self {
            DistSpec::Rademacher { scale } => *scale,
            DistSpec::Uniform { half_width } => half_width / 2.0,
            DistSpec::Discrete { points, probs } => points.iter().zip(probs).map(|(x, p)| p * x.abs()).sum(),
            DistSpec::ScaledChi2Term { scale } => scale * 4.0 * std_normal_pdf(1.0),
        }
    }

    /// `E|X|³`.
    pub fn abs3(&self) -> f64 {
        match self {
            DistSpec::Rademacher { scale } => scale.powi(3),
            DistSpec::Uniform { half_width } => half_width.powi(3) / 4.0,
            DistSpec::Discrete { points, probs } => points.iter().zip(probs).map(|(x, p)| p * x.abs().powi(3)).sum(),
            DistSpec::ScaledChi2Term { scale } => scale.powi(3) * chi2_term_abs3(),
        }
    }

    /// 64-bit words of the random stream consumed per draw.
    pub fn words_per_draw(&self) -> u64 {
        match self {
            DistSpec::ScaledChi2Term { .. } => 2,
            _ => 1,
        }
    }

    /// Smallest interval containing the support of `K`.
    fn kernel_support(&self) -> (f64, f64) {
        match self {
            DistSpec::Rademacher { scale } => (-scale, *scale),
            DistSpec::Uniform { half_width } => (-half_width, *half_width),
            DistSpec::Discrete { points, .. } => {
                let lo = points.iter().copied().fold(0.0, f64::min);
                let hi = points.iter().copied().fold(0.0, f64::max);
                (lo, hi)
            }
            // s = √(1 + t/c) ≥ 40 beyond this point; K is below 1e-340 there.
            DistSpec::ScaledChi2Term { scale } => (-scale, scale * 1599.0),
        }
    }
}

/// `K(t) = E[X (I(X > t > 0) - I(X < t < 0))]`.
pub fn k_kernel(d: &DistSpec, t: f64) -> Result<f64> {
    d.validate()?;
    Ok(k_kernel_unchecked(d, t))
}

fn k_kernel_unchecked(d: &DistSpec, t: f64) -> f64 {
    if t == 0.0 || !t.is_finite() {
        return 0.0;
    }
    match d {
        DistSpec::Rademacher { scale } => {
            if t.abs() < *scale {
                0.5 * scale
            } else {
                0.0
            }
        }
        DistSpec::Uniform { half_width: a } => {
            if t.abs() < *a {
                (a * a - t * t) / (4.0 * a)
            } else {
                0.0
            }
        }
        DistSpec::Discrete { points, probs } => {
            let pairs = points.iter().zip(probs);
            if t > 0.0 {
                pairs.filter(|(&x, _)| x > t).map(|(x, p)| p * x).sum()
            } else {
                -pairs.filter(|(&x, _)| x < t).map(|(x, p)| p * x).sum::<f64>()
            }
        }
        DistSpec::ScaledChi2Term { scale: c } => {
            let u = 1.0 + t / c;
            if u <= 0.0 {
                return 0.0;
            }
            let s = u.sqrt();
            2.0 * c * s * std_normal_pdf(s)
        }
    }
}

/// `(∫ K(t) dt, ∫ |t| K(t) dt)`, computed from `K` itself: exact sums for
/// discrete laws (where `K` is a step function), adaptive quadrature
/// otherwise.
pub fn k_kernel_moments(d: &DistSpec) -> Result<(f64, f64)> {
    d.validate()?;
    if let DistSpec::Discrete { points, .. } = d {
        let mut knots: Vec<f64> = points.iter().copied().chain(std::iter::once(0.0)).collect();
        knots.sort_by(|a, b| a.total_cmp(b));
        knots.dedup();
        let mut mass = 0.0;
        let mut first = 0.0;
        for pair in knots.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let k = k_kernel_unchecked(d, 0.5 * (a + b));
            mass += k * (b - a);
            // ∫_a^b |t| dt on a piece that does not straddle 0.
            first += k * 0.5 * (b * b.abs() - a * a.abs());
        }
        return Ok((mass, first));
    }
    let (lo, hi) = d.kernel_support();
    let breaks = [0.0];
    let k = |t: f64| k_kernel_unchecked(d, t);
    let mass = integrate_pieces(&k, lo, hi, &breaks, 1e-13)?;
    let first = integrate_pieces(&|t: f64| t.abs() * k(t), lo, hi, &breaks, 1e-13)?;
    Ok((mass, first))
}

/// Independent summands whose variances sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndepSumModel {
    terms: Vec<DistSpec>,
}

/// One entry of a model file: a summand law, optionally repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub dist: DistSpec,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

impl IndepSumModel {
    pub fn new(terms: Vec<DistSpec>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation("model has no summands".into()));
        }
        for t in &terms {
            t.validate()?;
        }
        let total: f64 = terms.iter().map(DistSpec::var).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!("summand variances sum to {total}, expected 1")));
        }
        Ok(Self { terms })
    }

    /// Parses a JSON model file: a list of `{"kind", "params"[, "repeat"]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ModelEntry> = serde_json::from_str(text).map_err(|e| Error::Parse(format!("model: {e}")))?;
        let mut terms = Vec::new();
        for e in entries {
            terms.extend(std::iter::repeat_n(e.dist, e.repeat));
        }
        Self::new(terms)
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<ModelEntry> = self.terms.iter().map(|d| ModelEntry { dist: d.clone(), repeat: 1 }).collect();
        serde_json::to_string_pretty(&entries).expect("model serializes")
    }

    pub fn terms(&self) -> &[DistSpec] {
        &self.terms
    }

    /// `n` i.i.d. Rademacher summands of scale `1/√n`.
    pub fn rademacher(n: usize) -> Result<Self> {
        Self::new(vec![DistSpec::Rademacher { scale: 1.0 / (n as f64).sqrt() }; n.max(1)])
    }

    /// `n` i.i.d. uniform summands of variance `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![DistSpec::Uniform { half_width: (3.0 / n as f64).sqrt() }; n.max(1)])
    }

    /// The standardized χ²(n): `n` summands `(Z_i² - 1)/√(2n)`.
    pub fn chi_square(n: usize) -> Result<Self> {
        Self::new(vec![DistSpec::ScaledChi2Term { scale: 1.0 / (2.0 * n as f64).sqrt() }; n.max(1)])
    }
}

/// `d_W(W, Z) ≤ 3 Σ E|X_i|³`.
pub fn wasserstein_bound_indep(m: &IndepSumModel) -> f64 {
    3.0 * m.terms.iter().map(DistSpec::abs3).sum::<f64>()
}

/// `samples` draws of `W = Σ X_i`.
///
/// Draw `k` reads words `[kS, (k+1)S)` of `stream`, where `S` is the total
/// words per draw over all summands, so the sample is independent of how the
/// work is split across threads.
pub fn simulate_sum(m: &IndepSumModel, stream: RandomStream, samples: usize) -> Result<SampleSet> {
    let words: u64 = m.terms.iter().map(DistSpec::words_per_draw).sum();
    // Discrete laws sample by inverse CDF.
    let cumulative: Vec<Vec<f64>> = m
        .terms
        .iter()
        .map(|t| match t {
            DistSpec::Discrete { probs, .. } => probs
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect(),
            _ => Vec::new(),
        })
        .collect();
    let values = fill_blocks(samples, |start, chunk| {
        let mut reader = stream.reader(start as u64 * words);
        for v in chunk.iter_mut() {
            let mut w = 0.0;
            for (term, cum) in m.terms.iter().zip(&cumulative) {
                w += match term {
                    DistSpec::Rademacher { scale } => {
                        if reader.next_unit() < 0.5 {
                            -scale
                        } else {
                            *scale
                        }
                    }
                    DistSpec::Uniform { half_width } => half_width * (2.0 * reader.next_unit() - 1.0),
                    DistSpec::Discrete { points, .. } => {
                        let u = reader.next_unit();
                        let idx = cum.iter().position(|&c| u < c).unwrap_or(points.len() - 1);
                        points[idx]
                    }
                    DistSpec::ScaledChi2Term { scale } => {
                        let z = reader.next_normal();
                        scale * (z * z - 1.0)
                    }
                };
            }
            *v = w;
        }
    });
    SampleSet::new(values)
}
