use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::Serialize;
use stein_chaos::chaos::{identity_checks, ChaosFunctional, IdentityCheck};
use stein_chaos::curve::{curve_csv, emit_curve, CurveFamily};
use stein_chaos::distance::{bootstrap_std_error, sample_distance, tv_to_normal_density, Density, DistanceReport, SampleSet};
use stein_chaos::functional::{bound_theta_e1mt, chi2_bounds, default_rules, Chi2Bounds, GaussianFunctional, PsiKind};
use stein_chaos::gauss::RandomStream;
use stein_chaos::hida::{bound_vs_empirical, carre_bound, BoundOptions, BoundReport, Normalization, BOOTSTRAP_REPLICATES};
use stein_chaos::indep::{k_kernel_moments, simulate_sum, wasserstein_bound_indep, DistSpec, IndepSumModel};
use stein_chaos::stein::{bundled_families, solve_stein, verify_constants, CheckStatus, TestFunction, CONSTANT_SLACK};
use stein_chaos::{distance, Metric};

use crate::args::*;
use crate::report::{Envelope, Provenance};
use crate::CliError;

/// What a command produced and whether an assertion failed.
pub struct Outcome {
    pub body: String,
    pub assertion_failed: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, assertion_failed: false }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn base_stream(seed: u64) -> RandomStream {
    RandomStream::new(seed, 0)
}

/// Tolerances a sampling command uses, with `--tol` overrides applied.
fn tolerances(overrides: &[String], defaults: &[(&str, f64)]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out: BTreeMap<String, f64> = defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for o in overrides {
        let (name, value) = o.split_once('=').ok_or_else(|| CliError::Input(format!("--tol expects NAME=VALUE, got '{o}'")))?;
        let value: f64 = value.trim().parse().map_err(|_| CliError::Input(format!("--tol {name}: '{value}' is not a number")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(CliError::Input(format!("--tol {name}: value must be positive")));
        }
        match out.get_mut(name.trim()) {
            Some(slot) => *slot = value,
            None => {
                let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
                return Err(CliError::Input(format!("unknown tolerance '{name}' (known: {})", known.join(", "))));
            }
        }
    }
    Ok(out)
}

pub fn stein_eval(a: &EvalArgs) -> Result<Outcome, CliError> {
    let h: TestFunction = a.h.parse()?;
    if !(a.step > 0.0) || !(a.to >= a.from) || !a.from.is_finite() || !a.to.is_finite() {
        return Err(CliError::Input("need finite --from <= --to and --step > 0".into()));
    }
    let count = ((a.to - a.from) / a.step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(CliError::Input(format!("grid of {count} points is too large")));
    }
    let sol = solve_stein(h)?;
    let mut out = Provenance::new(None).comment(&BTreeMap::new());
    let _ = writeln!(out, "# h = {h}, Eh(Z) = {}", sol.eh_z);
    out.push_str("w,f,fprime,residual\n");
    for i in 0..count {
        let w = a.from + a.step * i as f64;
        let _ = writeln!(out, "{w},{},{},{}", sol.eval_f(w), sol.eval_fprime(w), sol.residual(w));
    }
    Ok(Outcome::ok(out))
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let families = if a.family == "all" { bundled_families() } else { vec![a.family.parse::<TestFunction>()?] };
    if !(a.grid_step > 0.0) {
        return Err(CliError::Input("--grid-step must be positive".into()));
    }
    let n = (20.0 / a.grid_step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| -10.0 + 20.0 * i as f64 / n as f64).collect();
    let mut tol = BTreeMap::new();
    tol.insert("slack".to_string(), CONSTANT_SLACK);
    let mut out = Provenance::new(None).with("grid_step", 20.0 / n as f64).comment(&tol);
    out.push_str("h,family,inequality,observed,bound,relation,status\n");
    let mut failed = false;
    for h in families {
        for c in verify_constants(h, &grid)? {
            failed |= c.status == CheckStatus::Fail;
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::NotApplicable => "not-applicable",
            };
            let num = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
            let _ = writeln!(
                out,
                "{h},{},{},{},{},{},{status}",
                c.family,
                c.quantity,
                num(c.observed),
                num(c.bound),
                c.relation.symbol()
            );
        }
    }
    Ok(Outcome { body: out, assertion_failed: failed })
}

#[derive(Serialize)]
struct DistanceOut {
    #[serde(flatten)]
    report: DistanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<String>,
}

pub fn distance(a: &DistanceArgs) -> Result<Outcome, CliError> {
    let metric: Metric = a.metric.into();
    let mut tol = BTreeMap::new();
    let (out, seed) = if let Some(path) = &a.input {
        let set = SampleSet::from_csv_str(&read(path)?)?;
        let mut report = sample_distance(&set, metric)?;
        let seed = (a.bootstrap > 0).then_some(a.seed.seed);
        if a.bootstrap > 0 {
            report.std_error = Some(bootstrap_std_error(&set, metric, a.bootstrap, base_stream(a.seed.seed))?);
        }
        (DistanceOut { report, sample_size: Some(set.len()), density: None }, seed)
    } else {
        let density = match a.density.expect("clap requires --input or --density") {
            DensityArg::Normal => Density::StandardNormal,
            DensityArg::ShiftedNormal => Density::ShiftedNormal {
                delta: a.delta.ok_or_else(|| CliError::Input("--density shifted-normal needs --delta".into()))?,
            },
            DensityArg::Chi2 => Density::StandardizedChiSquare {
                n: a.n.ok_or_else(|| CliError::Input("--density chi2 needs --n".into()))?,
            },
        };
        if metric != Metric::TotalVariation {
            return Err(CliError::Input("densities are compared in total variation only (--metric tv)".into()));
        }
        tol.insert("quadrature_abs".to_string(), distance::TV_TOLERANCE);
        let report = tv_to_normal_density(&density)?;
        (DistanceOut { report, sample_size: None, density: Some(density.name()) }, None)
    };
    let mut prov = Provenance::new(seed);
    if a.bootstrap > 0 {
        prov = prov.with("bootstrap_replicates", a.bootstrap as f64);
    }
    Ok(Outcome::ok(Envelope { command: "distance", report: out, tolerances: tol, provenance: prov }.to_json()))
}

#[derive(Serialize)]
struct KernelCheck {
    summand: DistSpec,
    count: usize,
    var: f64,
    kernel_mass: f64,
    abs3: f64,
    kernel_first_abs: f64,
}

#[derive(Serialize)]
struct IndepSumReport {
    metric: Metric,
    bound: f64,
    sum_abs3: f64,
    summands: usize,
    kernel_checks: Vec<KernelCheck>,
    empirical_distance: Option<f64>,
    empirical_std_error: Option<f64>,
    samples: usize,
    seed: u64,
    within_bound: bool,
}

pub fn bound_indep(a: &IndepSumArgs) -> Result<Outcome, CliError> {
    let s = &a.sampling;
    let tol = tolerances(&s.tolerances, &[("assert_sigmas", 3.0)])?;
    let model = IndepSumModel::from_json(&read(&a.model)?)?;
    let bound = wasserstein_bound_indep(&model);
    let mut kernel_checks: Vec<KernelCheck> = Vec::new();
    for d in model.terms() {
        if let Some(last) = kernel_checks.last_mut().filter(|k| &k.summand == d) {
            last.count += 1;
            continue;
        }
        let (mass, first) = k_kernel_moments(d)?;
        kernel_checks.push(KernelCheck {
            summand: d.clone(),
            count: 1,
            var: d.var(),
            kernel_mass: mass,
            abs3: d.abs3(),
            kernel_first_abs: first,
        });
    }
    let stream = base_stream(s.seed.seed);
    let (empirical, se) = if s.samples >= 2 {
        let set = simulate_sum(&model, stream.substream(0), s.samples)?;
        let d = sample_distance(&set, Metric::Wasserstein)?.estimate;
        let se = bootstrap_std_error(&set, Metric::Wasserstein, BOOTSTRAP_REPLICATES, stream.substream(1))?;
        (Some(d), Some(se))
    } else {
        (None, None)
    };
    let within = match (empirical, se) {
        (Some(d), Some(se)) => d <= bound + tol["assert_sigmas"] * se,
        _ => true,
    };
    let report = IndepSumReport {
        metric: Metric::Wasserstein,
        bound,
        sum_abs3: bound / 3.0,
        summands: model.terms().len(),
        kernel_checks,
        empirical_distance: empirical,
        empirical_std_error: se,
        samples: s.samples,
        seed: s.seed.seed,
        within_bound: within,
    };
    let prov = Provenance::new(Some(s.seed.seed)).with("bootstrap_replicates", BOOTSTRAP_REPLICATES as f64);
    let body = Envelope { command: "bound indep-sum", report, tolerances: tol, provenance: prov }.to_json();
    Ok(Outcome { body, assertion_failed: s.assert && !within })
}

#[derive(Serialize)]
struct GaussianReport {
    psi: String,
    n: usize,
    #[serde(flatten)]
    bound: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi2_closed_form: Option<Chi2Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density_distance: Option<f64>,
    within_bound: bool,
}

fn within(r: &BoundReport, sigmas: f64) -> bool {
    match (r.empirical_distance, r.empirical_std_error) {
        (Some(d), se) => d <= r.bound + sigmas * se.unwrap_or(0.0),
        _ => true,
    }
}

pub fn bound_gaussian(a: &GaussianArgs) -> Result<Outcome, CliError> {
    let s = &a.sampling;
    let tol = tolerances(&s.tolerances, &[("assert_sigmas", 3.0)])?;
    let psi: PsiKind = a.psi.parse()?;
    let g = GaussianFunctional::new(psi, a.n)?;
    let metric: Metric = a.metric.into();
    let rules = default_rules();
    let report = bound_theta_e1mt(&g, metric, &rules, base_stream(s.seed.seed), s.samples)?;
    let chi2 = (psi == PsiKind::Chi2).then(|| chi2_bounds(a.n)).transpose()?;
    let density_distance = if psi == PsiKind::Chi2 && metric == Metric::TotalVariation {
        let n = u32::try_from(a.n).map_err(|_| CliError::Input(format!("--n {} too large for the chi-square density", a.n)))?;
        Some(tv_to_normal_density(&Density::StandardizedChiSquare { n })?.estimate)
    } else {
        None
    };
    let mut ok = within(&report, tol["assert_sigmas"]);
    if let Some(d) = density_distance {
        ok &= d <= report.bound.max(report.variance_bound.unwrap_or(0.0));
    }
    let mut tolerances = tol;
    tolerances.insert("t_stability_rel".into(), stein_chaos::functional::STABILITY_TOL);
    let prov = Provenance::new(Some(s.seed.seed))
        .with("gauss_legendre_nodes", rules.0.len() as f64)
        .with("gauss_hermite_nodes", rules.1.len() as f64)
        .with("bootstrap_replicates", BOOTSTRAP_REPLICATES as f64);
    let report = GaussianReport { psi: psi.to_string(), n: a.n, bound: report, chi2_closed_form: chi2, density_distance, within_bound: ok };
    let body = Envelope { command: "bound gaussian-functional", report, tolerances, provenance: prov }.to_json();
    Ok(Outcome { body, assertion_failed: s.assert && !ok })
}

#[derive(Serialize)]
struct ChaosReport {
    #[serde(flatten)]
    bound: BoundReport,
    within_bound: bool,
}

pub fn bound_chaos(a: &ChaosBoundArgs) -> Result<Outcome, CliError> {
    let s = &a.sampling;
    let defaults = BoundOptions::default();
    let tol = tolerances(&s.tolerances, &[("assert_sigmas", 3.0), ("quadrature_abs", defaults.quadrature_tol)])?;
    let phi = ChaosFunctional::from_json(&read(&a.functional)?)?;
    let opts = BoundOptions {
        normalization: match a.normalization {
            NormalizationArg::Keep => Normalization::Keep,
            NormalizationArg::Normalize => Normalization::Normalize,
            NormalizationArg::Reject => Normalization::Reject,
        },
        quadrature_tol: tol["quadrature_abs"],
        ..defaults
    };
    let metric: Metric = a.metric.into();
    let stream = base_stream(s.seed.seed);
    let report = if metric == Metric::TotalVariation {
        carre_bound(&phi, metric, stream, s.samples, &opts)?
    } else {
        bound_vs_empirical(&phi, metric, stream, s.samples, &opts)?
    };
    let ok = within(&report, tol["assert_sigmas"]);
    let prov = Provenance::new(Some(s.seed.seed))
        .with("max_quadrature_coords", opts.max_quadrature_coords as f64)
        .with("bootstrap_replicates", BOOTSTRAP_REPLICATES as f64);
    let body = Envelope { command: "bound chaos", report: ChaosReport { bound: report, within_bound: ok }, tolerances: tol, provenance: prov }.to_json();
    Ok(Outcome { body, assertion_failed: s.assert && !ok })
}

#[derive(Serialize)]
struct CheckReport {
    terms: usize,
    order: usize,
    active_coords: Vec<usize>,
    checks: Vec<IdentityCheck>,
    passed: bool,
}

pub fn chaos_check(a: &ChaosCheckArgs) -> Result<Outcome, CliError> {
    let phi = ChaosFunctional::from_json(&read(&a.functional)?)?;
    let checks = identity_checks(&phi, base_stream(a.seed.seed))?;
    let passed = checks.iter().all(IdentityCheck::passed);
    let mut tol = BTreeMap::new();
    tol.insert("identity_abs".to_string(), stein_chaos::chaos::IDENTITY_TOL);
    tol.insert("gradient_rel".to_string(), stein_chaos::chaos::GRADIENT_TOL);
    let report = CheckReport { terms: phi.len(), order: phi.order(), active_coords: phi.active_coords(), checks, passed };
    let prov = Provenance::new(Some(a.seed.seed)).with("gradient_step", stein_chaos::chaos::GRADIENT_STEP);
    let body = Envelope { command: "chaos check", report, tolerances: tol, provenance: prov }.to_json();
    Ok(Outcome { body, assertion_failed: !passed })
}

pub fn curve(a: &CurveArgs) -> Result<Outcome, CliError> {
    let family = match a.family {
        CurveFamilyArg::Chi2Bounds => CurveFamily::Chi2Bounds,
        CurveFamilyArg::IndepSumBounds => CurveFamily::IndepSumBounds,
    };
    let rows = emit_curve(family, &a.n_values, base_stream(a.seed.seed), a.samples)?;
    let prov = Provenance::new(Some(a.seed.seed))
        .with("samples", a.samples as f64)
        .with("bootstrap_replicates", BOOTSTRAP_REPLICATES as f64);
    let mut body = prov.comment(&BTreeMap::new());
    body.push_str(&curve_csv(&rows));
    Ok(Outcome::ok(body))
}
