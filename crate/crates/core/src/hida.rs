//! The chaos-level Stein bound `d(φ, Z) ≤ θ · E|1 - Γ|` with
//! `Γ = Σ_j a_j(N⁻¹φ) · a_j(φ)`.

use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosFunctional, Evaluator, MAX_ORDER};
use crate::error::{Error, Result};
use crate::gauss::normal::std_normal_pdf;
use crate::gauss::quadrature::{integrate, normal_expectation_abs, NORMAL_WINDOW};
use crate::gauss::rng::{map_blocks, MeanAcc, RandomStream};
use crate::metric::Metric;

/// A Stein-type bound together with the Monte Carlo and empirical evidence
/// behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub metric: Metric,
    pub theta: f64,
    /// `θ · e_abs_dev`.
    pub bound: f64,
    /// `E Γ` (or `E T` for Gaussian functionals).
    pub carre_mean: f64,
    /// `E|1 - Γ|` as used in `bound`.
    pub e_abs_dev: f64,
    /// Standard error of the sampled `E|1 - Γ|`; zero when no sampling was needed.
    pub mc_std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub empirical_distance: Option<f64>,
    /// Bootstrap standard error of `empirical_distance`.
    pub empirical_std_error: Option<f64>,
    /// How `e_abs_dev` was obtained: `exact`, `quadrature` or `monte-carlo`.
    pub method: String,
    /// Sampled `E|1 - Γ|`, kept as a cross-check when `method` is not sampling.
    pub mc_e_abs_dev: Option<f64>,
    /// `θ · √Var Γ`, the Cauchy–Schwarz relaxation of the bound, when known.
    pub variance_bound: Option<f64>,
    /// Factor applied to the input to reach unit variance (1 when untouched).
    pub scale_factor: f64,
}

/// Draws `samples` standard normal vectors of length `dim` and maps each to
/// `(value, abs_dev)`. Vector `k` reads normal draws `k·dim .. (k+1)·dim`.
///
/// Returns the accumulated `abs_dev` and all `value`s in draw order.
pub(crate) fn sample_pairs<F>(stream: RandomStream, dim: usize, samples: usize, f: F) -> (MeanAcc, Vec<f64>)
where
    F: Fn(&[f64]) -> (f64, f64) + Sync + Send,
{
    let blocks = map_blocks(samples, |range| {
        let mut reader = stream.reader(2 * (range.start * dim) as u64);
        let mut xi = vec![0.0; dim];
        let mut acc = MeanAcc::default();
        let mut values = Vec::with_capacity(range.len());
        for _ in range {
            for x in xi.iter_mut() {
                *x = reader.next_normal();
            }
            let (v, d) = f(&xi);
            acc.push(d);
            values.push(v);
        }
        (acc, values)
    });
    let mut acc = MeanAcc::default();
    let mut values = Vec::with_capacity(samples);
    for (a, v) in blocks {
        acc.merge(&a);
        values.extend(v);
    }
    (acc, values)
}

/// Bootstrap replicates behind `empirical_std_error`.
pub const BOOTSTRAP_REPLICATES: usize = 24;

/// Empirical distance of `values` to `N(0, 1)` with its bootstrap standard
/// error; `None` for total variation, which needs a density.
pub(crate) fn empirical_distance(
    values: Vec<f64>,
    metric: Metric,
    stream: RandomStream,
) -> Result<(Option<f64>, Option<f64>)> {
    if metric == Metric::TotalVariation || values.len() < 2 {
        return Ok((None, None));
    }
    let set = crate::distance::SampleSet::new(values)?;
    let d = crate::distance::sample_distance(&set, metric)?;
    let se = crate::distance::bootstrap_std_error(&set, metric, BOOTSTRAP_REPLICATES, stream)?;
    Ok((Some(d.estimate), Some(se)))
}

/// What to do with a centered input whose variance is not one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Use `φ` as given; the bound then also measures the variance mismatch.
    #[default]
    Keep,
    /// Rescale to unit variance and record the factor.
    Normalize,
    /// Refuse inputs with `|Var φ - 1| > 1e-10`.
    Reject,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep" => Ok(Normalization::Keep),
            "normalize" => Ok(Normalization::Normalize),
            "reject" => Ok(Normalization::Reject),
            _ => Err(Error::Parse(format!("unknown normalization '{s}' (keep, normalize, reject)"))),
        }
    }
}

/// Tolerance on `Var φ = 1` under [`Normalization::Reject`].
pub const VARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub normalization: Normalization,
    /// Largest number of active coordinates handled by quadrature.
    pub max_quadrature_coords: usize,
    /// Absolute tolerance of the quadrature for `E|1 - Γ|`.
    pub quadrature_tol: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { normalization: Normalization::Keep, max_quadrature_coords: 2, quadrature_tol: 1e-10 }
    }
}

/// `Γ = Σ_j a_j(N⁻¹φ) · a_j(φ)`, the chaos form of `∫ ∂_t N⁻¹φ · ∂_t φ dt`.
pub fn carre_functional(phi: &ChaosFunctional) -> Result<ChaosFunctional> {
    let inv = phi.inv_number_op()?;
    let order = 2 * phi.order().saturating_sub(1);
    if order > MAX_ORDER {
        return Err(Error::Capacity(format!("carre functional would reach order {order} above {MAX_ORDER}")));
    }
    let d = phi.hida_derivative();
    let mut gamma = ChaosFunctional::zero();
    for (&j, a) in &d.components {
        gamma = gamma.add(&inv.annihilate(j).multiply(a)?);
    }
    Ok(gamma)
}

/// Pointwise `Γ(ξ)` over the active coordinates of `φ`.
enum CarreEval {
    Exact(Evaluator),
    Pairs(Vec<(Evaluator, Evaluator)>),
}

impl CarreEval {
    fn new(phi: &ChaosFunctional, gamma: Option<&ChaosFunctional>, coords: &[usize]) -> Result<Self> {
        if let Some(g) = gamma {
            return Ok(CarreEval::Exact(Evaluator::new(g, coords)?));
        }
        let inv = phi.inv_number_op()?;
        let pairs = phi
            .hida_derivative()
            .components
            .iter()
            .map(|(&j, a)| Ok((Evaluator::new(&inv.annihilate(j), coords)?, Evaluator::new(a, coords)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CarreEval::Pairs(pairs))
    }

    fn eval(&self, xi: &[f64], table: &mut Vec<f64>) -> f64 {
        match self {
            CarreEval::Exact(e) => e.eval_with(xi, table),
            CarreEval::Pairs(p) => p.iter().map(|(a, b)| a.eval_with(xi, table) * b.eval_with(xi, table)).sum(),
        }
    }
}

fn prepare(phi: &ChaosFunctional, normalization: Normalization) -> Result<(ChaosFunctional, f64)> {
    if phi.mean() != 0.0 {
        return Err(Error::Precondition(format!("the bound needs E[phi] = 0, got {}", phi.mean())));
    }
    let var: f64 = phi.terms().values().map(|c| c * c).sum();
    if var == 0.0 {
        return Err(Error::Precondition("phi is identically zero".into()));
    }
    match normalization {
        Normalization::Keep => Ok((phi.clone(), 1.0)),
        Normalization::Normalize => {
            let s = 1.0 / var.sqrt();
            Ok((phi.scaled(s), s))
        }
        Normalization::Reject if (var - 1.0).abs() > VARIANCE_TOL => {
            Err(Error::Validation(format!("Var phi = {var}, expected 1 within {VARIANCE_TOL}")))
        }
        Normalization::Reject => Ok((phi.clone(), 1.0)),
    }
}

/// `E|1 - Γ|` by adaptive quadrature over one or two Gaussian coordinates.
fn quadrature_abs_dev(gamma: &CarreEval, dims: usize, tol: f64) -> Result<f64> {
    let one = |xi: &[f64]| {
        let mut table = Vec::new();
        1.0 - gamma.eval(xi, &mut table)
    };
    match dims {
        0 => Ok(one(&[]).abs()),
        1 => normal_expectation_abs(&|z| one(&[z]), tol),
        2 => {
            // Inner integrals fail only through accuracy errors; surface the first.
            let failure = std::sync::Mutex::new(None);
            let outer = |x: f64| match normal_expectation_abs(&|y| one(&[x, y]), 0.01 * tol) {
                Ok(v) => v * std_normal_pdf(x),
                Err(e) => {
                    failure.lock().expect("no poisoning").get_or_insert(e);
                    0.0
                }
            };
            let v = integrate(&outer, -NORMAL_WINDOW, NORMAL_WINDOW, tol)?;
            match failure.into_inner().expect("no poisoning") {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        _ => Err(Error::Capability("quadrature over more than two coordinates".into())),
    }
}

fn bound_impl(
    phi: &ChaosFunctional,
    metric: Metric,
    stream: RandomStream,
    samples: usize,
    opts: &BoundOptions,
    with_empirical: bool,
) -> Result<BoundReport> {
    let (phi, scale_factor) = prepare(phi, opts.normalization)?;
    let theta = metric.theta();
    let coords = phi.active_coords();
    let gamma = match carre_functional(&phi) {
        Ok(g) => Some(g),
        Err(Error::Capacity(_)) => None,
        Err(e) => return Err(e),
    };
    let carre = CarreEval::new(&phi, gamma.as_ref(), &coords)?;
    let phi_eval = Evaluator::new(&phi, &coords)?;

    let (mc, values) = sample_pairs(stream.substream(0), coords.len(), samples, |xi| {
        let mut table = Vec::new();
        let v = phi_eval.eval_with(xi, &mut table);
        (v, (1.0 - carre.eval(xi, &mut table)).abs())
    });
    let (empirical, empirical_se) = if with_empirical {
        empirical_distance(values, metric, stream.substream(1))?
    } else {
        (None, None)
    };
    let mc_mean = (samples > 0).then(|| mc.mean());

    let deterministic = gamma.as_ref().is_some_and(|g| g.order() == 0);
    let (e_abs_dev, method, mc_std_error, cross) = if deterministic {
        let g = gamma.as_ref().expect("checked above").mean();
        ((1.0 - g).abs(), "exact", 0.0, mc_mean)
    } else if coords.len() <= opts.max_quadrature_coords {
        (quadrature_abs_dev(&carre, coords.len(), opts.quadrature_tol)?, "quadrature", mc.std_error(), mc_mean)
    } else {
        let v = mc_mean.ok_or_else(|| Error::Domain("Monte Carlo evaluation needs samples > 0".into()))?;
        (v, "monte-carlo", mc.std_error(), None)
    };
    let carre_mean = match &gamma {
        Some(g) => g.mean(),
        None => phi.terms().values().map(|c| c * c).sum(),
    };
    // E|1 - Γ| ≤ ‖1 - Γ‖_{2,0}, read off the coefficients of Γ.
    let variance_bound = gamma.as_ref().map(|g| theta * g.add(&ChaosFunctional::constant(-1.0)).norm_2p(0.0));
    Ok(BoundReport {
        metric,
        theta,
        bound: theta * e_abs_dev,
        carre_mean,
        e_abs_dev,
        mc_std_error,
        samples: samples as u64,
        seed: stream.seed,
        empirical_distance: empirical,
        empirical_std_error: empirical_se,
        method: method.into(),
        mc_e_abs_dev: cross,
        variance_bound,
        scale_factor,
    })
}

/// `θ · E|1 - Γ|` for a centered finite chaos functional.
///
/// `E|1 - Γ|` is exact when `Γ` is constant, computed by adaptive quadrature
/// when `φ` involves at most `opts.max_quadrature_coords` coordinates (with
/// a Monte Carlo cross-check when `samples > 0`) and sampled otherwise.
pub fn carre_bound(
    phi: &ChaosFunctional,
    metric: Metric,
    stream: RandomStream,
    samples: usize,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    bound_impl(phi, metric, stream, samples, opts, false)
}

/// [`carre_bound`] plus the empirical distance of `samples` draws of `φ`
/// to `N(0, 1)`, measured on the same draws.
pub fn bound_vs_empirical(
    phi: &ChaosFunctional,
    metric: Metric,
    stream: RandomStream,
    samples: usize,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if metric == Metric::TotalVariation {
        return Err(Error::Capability("total variation cannot be estimated from samples".into()));
    }
    bound_impl(phi, metric, stream, samples, opts, true)
}

impl BoundReport {
    /// Whether the empirical distance respects the bound up to three
    /// sampling standard errors (vacuously true without one).
    pub fn empirical_within_bound(&self) -> bool {
        match self.empirical_distance {
            Some(d) => d <= self.bound + 3.0 * self.empirical_std_error.unwrap_or(0.0),
            None => true,
        }
    }
}
