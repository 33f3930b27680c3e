//! Solutions of the Stein equation `f'(w) - w f(w) = h(w) - E h(Z)` and grid
//! certification of their boundedness constants.
//!
//! The solution is evaluated as a one-signed tail integral on each side of
//! the origin,
//!
//! ```text
//! w ≤ 0:  f(w) =  ∫_0^∞ e^{ws - s²/2} [h(w - s) - Eh(Z)] ds
//! w > 0:  f(w) = -∫_0^∞ e^{-ws - s²/2} [h(w + s) - Eh(Z)] ds
//! ```
//!
//! which is the usual `e^{w²/2} ∫ e^{-t²/2} (...) dt` form with the Gaussian
//! factor folded into the integrand, so nothing overflows.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::normal::{lower_mills, normal_cdf, std_normal_pdf, upper_mills};
use crate::gauss::quadrature::{gauss_hermite_nodes, integrate_pieces};

/// Beyond this `|w|` the solution for bounded `h` is replaced by its
/// asymptote `-(h(w) - Eh(Z)) / w`.
pub const ASYMPTOTIC_CUTOFF: f64 = 38.0;
/// Slack allowed on every certified inequality.
pub const CONSTANT_SLACK: f64 = 1e-9;

const TAIL_LENGTH: f64 = 40.0;
const INTEGRAL_TOL: f64 = 1e-13;

/// Lipschitz test functions with `‖h'‖_∞ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LipschitzFn {
    Identity,
    Abs { center: f64 },
    Sin,
    Clip { level: f64 },
}

/// Bounded test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BoundedFn {
    Constant { value: f64 },
    Tanh,
    Cos,
    Interval { lo: f64, hi: f64 },
}

/// A test function `h` together with the regularity class that decides
/// which solution bounds apply to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `I(w ≤ x)`.
    Indicator { x: f64 },
    /// 1 for `w ≤ x`, 0 for `w ≥ x + eps`, linear in between.
    SmoothedIndicator { x: f64, eps: f64 },
    Lipschitz(LipschitzFn),
    Bounded(BoundedFn),
}

impl TestFunction {
    pub fn indicator(x: f64) -> Self {
        TestFunction::Indicator { x }
    }

    pub fn smoothed_indicator(x: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() || !x.is_finite() {
            return Err(Error::Domain(format!("smoothed indicator needs finite x and eps > 0, got x={x}, eps={eps}")));
        }
        Ok(TestFunction::SmoothedIndicator { x, eps })
    }

    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            TestFunction::Indicator { x } => {
                if w <= x {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::SmoothedIndicator { x, eps } => {
                if w <= x {
                    1.0
                } else if w >= x + eps {
                    0.0
                } else {
                    1.0 + (x - w) / eps
                }
            }
            TestFunction::Lipschitz(l) => match l {
                LipschitzFn::Identity => w,
                LipschitzFn::Abs { center } => (w - center).abs(),
                LipschitzFn::Sin => w.sin(),
                LipschitzFn::Clip { level } => w.clamp(-level, level),
            },
            TestFunction::Bounded(b) => match b {
                BoundedFn::Constant { value } => value,
                BoundedFn::Tanh => w.tanh(),
                BoundedFn::Cos => w.cos(),
                BoundedFn::Interval { lo, hi } => {
                    if w >= lo && w <= hi {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
        }
    }

    /// `h'(w)` where `h` is absolutely continuous (right derivative at kinks).
    pub fn derivative(&self, w: f64) -> Option<f64> {
        match *self {
            TestFunction::Indicator { .. } => None,
            TestFunction::SmoothedIndicator { x, eps } => Some(if w >= x && w < x + eps { -1.0 / eps } else { 0.0 }),
            TestFunction::Lipschitz(l) => Some(match l {
                LipschitzFn::Identity => 1.0,
                LipschitzFn::Abs { center } => {
                    if w >= center {
                        1.0
                    } else {
                        -1.0
                    }
                }
                LipschitzFn::Sin => w.cos(),
                LipschitzFn::Clip { level } => {
                    if w >= -level && w < level {
                        1.0
                    } else {
                        0.0
                    }
                }
            }),
            TestFunction::Bounded(b) => match b {
                BoundedFn::Constant { .. } => Some(0.0),
                BoundedFn::Tanh => Some(1.0 - w.tanh().powi(2)),
                BoundedFn::Cos => Some(-w.sin()),
                BoundedFn::Interval { .. } => None,
            },
        }
    }

    /// `‖h'‖_∞` when `h` is absolutely continuous.
    pub fn lipschitz_const(&self) -> Option<f64> {
        match *self {
            TestFunction::Indicator { .. } => None,
            TestFunction::SmoothedIndicator { eps, .. } => Some(1.0 / eps),
            TestFunction::Lipschitz(_) => Some(1.0),
            TestFunction::Bounded(b) => match b {
                BoundedFn::Constant { .. } => Some(0.0),
                BoundedFn::Tanh | BoundedFn::Cos => Some(1.0),
                BoundedFn::Interval { .. } => None,
            },
        }
    }

    /// `(inf h, sup h)` when `h` is bounded.
    pub fn range(&self) -> Option<(f64, f64)> {
        match *self {
            TestFunction::Indicator { .. } | TestFunction::SmoothedIndicator { .. } => Some((0.0, 1.0)),
            TestFunction::Lipschitz(l) => match l {
                LipschitzFn::Identity | LipschitzFn::Abs { .. } => None,
                LipschitzFn::Sin => Some((-1.0, 1.0)),
                LipschitzFn::Clip { level } => Some((-level, level)),
            },
            TestFunction::Bounded(b) => match b {
                BoundedFn::Constant { value } => Some((value, value)),
                BoundedFn::Tanh | BoundedFn::Cos => Some((-1.0, 1.0)),
                BoundedFn::Interval { .. } => Some((0.0, 1.0)),
            },
        }
    }

    /// Points where `h` or `h'` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            TestFunction::Indicator { x } => vec![x],
            TestFunction::SmoothedIndicator { x, eps } => vec![x, x + eps],
            TestFunction::Lipschitz(LipschitzFn::Abs { center }) => vec![center],
            TestFunction::Lipschitz(LipschitzFn::Clip { level }) => vec![-level, level],
            TestFunction::Bounded(BoundedFn::Interval { lo, hi }) => vec![lo, hi],
            _ => Vec::new(),
        }
    }

    /// `E h(Z)`: closed forms where `h` has kinks, 64-node Gauss–Hermite for
    /// the smooth kinds.
    pub fn expectation(&self) -> Result<f64> {
        Ok(match *self {
            TestFunction::Indicator { x } => normal_cdf(x),
            TestFunction::SmoothedIndicator { x, eps } => {
                // Φ(x) + ∫_x^{x+ε} (1 + (x - w)/ε) φ(w) dw
                let mass = normal_cdf(x + eps) - normal_cdf(x);
                let first = std_normal_pdf(x) - std_normal_pdf(x + eps);
                normal_cdf(x) + (1.0 + x / eps) * mass - first / eps
            }
            TestFunction::Lipschitz(LipschitzFn::Abs { center: a }) => {
                2.0 * std_normal_pdf(a) + a * (2.0 * normal_cdf(a) - 1.0)
            }
            TestFunction::Lipschitz(LipschitzFn::Identity) | TestFunction::Lipschitz(LipschitzFn::Clip { .. }) => 0.0,
            TestFunction::Bounded(BoundedFn::Constant { value }) => value,
            TestFunction::Bounded(BoundedFn::Interval { lo, hi }) => {
                if hi < lo {
                    0.0
                } else {
                    normal_cdf(hi) - normal_cdf(lo)
                }
            }
            TestFunction::Lipschitz(LipschitzFn::Sin) | TestFunction::Bounded(BoundedFn::Tanh | BoundedFn::Cos) => {
                let rule = gauss_hermite_nodes(64)?;
                rule.apply(|z| self.eval(z))
            }
        })
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, TestFunction::Indicator { .. })
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TestFunction::Indicator { x } => write!(f, "indicator:{x}"),
            TestFunction::SmoothedIndicator { x, eps } => write!(f, "smoothed:{x},{eps}"),
            TestFunction::Lipschitz(l) => match l {
                LipschitzFn::Identity => write!(f, "identity"),
                LipschitzFn::Abs { center } => write!(f, "abs:{center}"),
                LipschitzFn::Sin => write!(f, "sin"),
                LipschitzFn::Clip { level } => write!(f, "clip:{level}"),
            },
            TestFunction::Bounded(b) => match b {
                BoundedFn::Constant { value } => write!(f, "constant:{value}"),
                BoundedFn::Tanh => write!(f, "tanh"),
                BoundedFn::Cos => write!(f, "cos"),
                BoundedFn::Interval { lo, hi } => write!(f, "interval:{lo},{hi}"),
            },
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// Parses `name[:arg[,arg]]`, e.g. `indicator:0`, `smoothed:0,0.5`,
    /// `abs:1`, `clip:2`, `interval:-1,1`, `constant:3`, `sin`, `tanh`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| Error::Parse(format!("test function '{s}': {e}"))))
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("test function '{name}' takes {n} argument(s), got {}", nums.len())))
            }
        };
        Ok(match name {
            "indicator" => {
                arity(1)?;
                TestFunction::Indicator { x: nums[0] }
            }
            "smoothed" | "smoothed_indicator" => {
                arity(2)?;
                TestFunction::smoothed_indicator(nums[0], nums[1])?
            }
            "identity" => {
                arity(0)?;
                TestFunction::Lipschitz(LipschitzFn::Identity)
            }
            "abs" => {
                let center = if nums.is_empty() { 0.0 } else { arity(1).map(|_| nums[0])? };
                TestFunction::Lipschitz(LipschitzFn::Abs { center })
            }
            "sin" => {
                arity(0)?;
                TestFunction::Lipschitz(LipschitzFn::Sin)
            }
            "clip" => {
                arity(1)?;
                if !(nums[0] > 0.0) {
                    return Err(Error::Domain("clip level must be positive".into()));
                }
                TestFunction::Lipschitz(LipschitzFn::Clip { level: nums[0] })
            }
            "constant" => {
                arity(1)?;
                TestFunction::Bounded(BoundedFn::Constant { value: nums[0] })
            }
            "tanh" => {
                arity(0)?;
                TestFunction::Bounded(BoundedFn::Tanh)
            }
            "cos" => {
                arity(0)?;
                TestFunction::Bounded(BoundedFn::Cos)
            }
            "interval" => {
                arity(2)?;
                TestFunction::Bounded(BoundedFn::Interval { lo: nums[0], hi: nums[1] })
            }
            other => return Err(Error::Parse(format!("unknown test function '{other}'"))),
        })
    }
}

/// The bounded solution `f_h` of the Stein equation for a fixed `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinSolution {
    pub h: TestFunction,
    /// `E h(Z)`.
    pub eh_z: f64,
}

/// Solves the Stein equation for `h`.
pub fn solve_stein(h: TestFunction) -> Result<SteinSolution> {
    let eh_z = h.expectation()?;
    if !eh_z.is_finite() {
        return Err(Error::Domain(format!("E h(Z) is not finite for {h}")));
    }
    Ok(SteinSolution { h, eh_z })
}

impl SteinSolution {
    /// `f_h(w)`; indicators use the closed form
    /// `√(2π) e^{w²/2} Φ(min(w,x)) (1 - Φ(max(w,x)))`.
    pub fn eval_f(&self, w: f64) -> f64 {
        match self.h {
            TestFunction::Indicator { x } => indicator_closed_form(x, w),
            _ => self.f_by_quadrature(w),
        }
    }

    /// `f_h(w)` from the tail-integral representation, for every kind of `h`.
    pub fn f_by_quadrature(&self, w: f64) -> f64 {
        let centered = |t: f64| self.h.eval(t) - self.eh_z;
        if w.abs() > ASYMPTOTIC_CUTOFF && self.h.range().is_some() {
            return -centered(w) / w;
        }
        let breaks = self.h.breakpoints();
        let result = if w <= 0.0 {
            let g = |s: f64| (w * s - 0.5 * s * s).exp() * centered(w - s);
            let kinks: Vec<f64> = breaks.iter().map(|b| w - b).collect();
            integrate_pieces(&g, 0.0, TAIL_LENGTH, &kinks, INTEGRAL_TOL)
        } else {
            let g = |s: f64| (-w * s - 0.5 * s * s).exp() * centered(w + s);
            let kinks: Vec<f64> = breaks.iter().map(|b| b - w).collect();
            integrate_pieces(&g, 0.0, TAIL_LENGTH, &kinks, INTEGRAL_TOL).map(|v| -v)
        };
        // The integrands are bounded and smooth between kinks, so the
        // recursion limit is never reached for the supported kinds.
        result.unwrap_or(f64::NAN)
    }

    /// `f_h'(w) = w f_h(w) + h(w) - E h(Z)`.
    pub fn eval_fprime(&self, w: f64) -> f64 {
        w * self.eval_f(w) + self.h.eval(w) - self.eh_z
    }

    /// `f_h''(w) = f_h(w) + w f_h'(w) + h'(w)`, defined when `h'` exists.
    pub fn eval_fsecond(&self, w: f64) -> Option<f64> {
        let dh = self.h.derivative(w)?;
        let f = self.eval_f(w);
        let fp = w * f + self.h.eval(w) - self.eh_z;
        Some(f + w * fp + dh)
    }

    /// `f'(w) - w f(w) - (h(w) - E h(Z))`.
    pub fn residual(&self, w: f64) -> f64 {
        let f = self.eval_f(w);
        let fp = self.eval_fprime(w);
        fp - w * f - (self.h.eval(w) - self.eh_z)
    }
}

fn indicator_closed_form(x: f64, w: f64) -> f64 {
    let root_2pi = (2.0 * PI).sqrt();
    if w <= x {
        root_2pi * lower_mills(w) * normal_cdf(-x)
    } else {
        root_2pi * normal_cdf(x) * upper_mills(w)
    }
}

/// Outcome of a single certified inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// observed ≤ bound
    #[serde(rename = "<=")]
    AtMost,
    /// observed > bound
    #[serde(rename = ">")]
    Above,
    /// observed ≥ bound
    #[serde(rename = ">=")]
    AtLeast,
    /// observed = bound within tolerance
    #[serde(rename = "=")]
    Equal,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
            Relation::Equal => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    /// Regularity class the inequality belongs to.
    pub family: String,
    pub quantity: String,
    pub observed: f64,
    pub bound: f64,
    pub relation: Relation,
    pub status: CheckStatus,
}

impl ConstantCheck {
    fn new(family: &str, quantity: &str, observed: f64, relation: Relation, bound: f64) -> Self {
        let ok = match relation {
            Relation::AtMost => observed <= bound + CONSTANT_SLACK,
            Relation::Above => observed > bound,
            Relation::AtLeast => observed >= bound - CONSTANT_SLACK,
            Relation::Equal => (observed - bound).abs() <= CONSTANT_SLACK,
        };
        Self {
            family: family.into(),
            quantity: quantity.into(),
            observed,
            bound,
            relation,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    fn not_applicable(family: &str) -> Self {
        Self {
            family: family.into(),
            quantity: "-".into(),
            observed: f64::NAN,
            bound: f64::NAN,
            relation: Relation::AtMost,
            status: CheckStatus::NotApplicable,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// `[-10, 10]` with spacing `1e-3`.
pub fn standard_grid() -> Vec<f64> {
    (0..=20_000).map(|i| -10.0 + 1e-3 * i as f64).collect()
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    w: f64,
    f: f64,
    fp: f64,
    fpp: Option<f64>,
}

/// Certifies, on `grid`, every solution bound that applies to the
/// regularity class of `h`; classes that do not apply are listed as
/// not-applicable.
pub fn verify_constants(h: TestFunction, grid: &[f64]) -> Result<Vec<ConstantCheck>> {
    validate_grid(grid)?;
    let sol = solve_stein(h)?;
    let points: Vec<GridPoint> = grid
        .par_iter()
        .map(|&w| {
            let f = sol.eval_f(w);
            let fp = w * f + h.eval(w) - sol.eh_z;
            let fpp = h.derivative(w).map(|dh| f + w * fp + dh);
            GridPoint { w, f, fp, fpp }
        })
        .collect();

    let sup = |g: &dyn Fn(&GridPoint) -> f64| points.iter().map(g).fold(0.0f64, |m, v| m.max(v.abs()));
    let min_of = |g: &dyn Fn(&GridPoint) -> f64| points.iter().map(g).fold(f64::INFINITY, f64::min);
    let max_of = |g: &dyn Fn(&GridPoint) -> f64| points.iter().map(g).fold(f64::NEG_INFINITY, f64::max);
    let mut checks = Vec::new();

    match h.range() {
        Some((lo, hi)) => {
            let m = (hi - sol.eh_z).max(sol.eh_z - lo);
            checks.push(ConstantCheck::new("bounded", "sup|f|", sup(&|p| p.f), Relation::AtMost, (PI / 2.0).sqrt() * m));
            checks.push(ConstantCheck::new("bounded", "sup|f'|", sup(&|p| p.fp), Relation::AtMost, 2.0 * m));
        }
        None => checks.push(ConstantCheck::not_applicable("bounded")),
    }

    match h.lipschitz_const() {
        Some(l) => {
            let fpp_sup = sup(&|p| p.fpp.unwrap_or(0.0));
            checks.push(ConstantCheck::new("lipschitz", "sup|f|", sup(&|p| p.f), Relation::AtMost, 2.0 * l));
            checks.push(ConstantCheck::new("lipschitz", "sup|f'|", sup(&|p| p.fp), Relation::AtMost, FRAC_2_PI.sqrt() * l));
            checks.push(ConstantCheck::new("lipschitz", "sup|f''|", fpp_sup, Relation::AtMost, 2.0 * l));
        }
        None => checks.push(ConstantCheck::not_applicable("lipschitz")),
    }

    if let TestFunction::Indicator { .. } = h {
        let c = (2.0 * PI).sqrt() / 4.0;
        checks.push(ConstantCheck::new("indicator", "min f", min_of(&|p| p.f), Relation::Above, 0.0));
        checks.push(ConstantCheck::new("indicator", "sup f", max_of(&|p| p.f), Relation::AtMost, c));
        checks.push(ConstantCheck::new("indicator", "sup|w f|", sup(&|p| p.w * p.f), Relation::AtMost, 1.0));
        checks.push(ConstantCheck::new("indicator", "sup|f'|", sup(&|p| p.fp), Relation::AtMost, 1.0));
        let osc = max_of(&|p| p.fp) - min_of(&|p| p.fp);
        checks.push(ConstantCheck::new("indicator", "sup|f'(w)-f'(v)|", osc, Relation::AtMost, 1.0));
        let excess = increment_excess(&sol, grid, c);
        checks.push(ConstantCheck::new(
            "indicator",
            "max |(w+u)f(w+u)-(w+v)f(w+v)| - (|w|+sqrt(2pi)/4)(|u|+|v|)",
            excess,
            Relation::AtMost,
            0.0,
        ));
    } else {
        checks.push(ConstantCheck::not_applicable("indicator"));
    }

    if let TestFunction::SmoothedIndicator { x, eps } = h {
        checks.push(ConstantCheck::new("smoothed-indicator", "min f", min_of(&|p| p.f), Relation::AtLeast, 0.0));
        checks.push(ConstantCheck::new("smoothed-indicator", "sup f", max_of(&|p| p.f), Relation::AtMost, 1.0));
        checks.push(ConstantCheck::new("smoothed-indicator", "sup|f'|", sup(&|p| p.fp), Relation::AtMost, 1.0));
        let osc = max_of(&|p| p.fp) - min_of(&|p| p.fp);
        checks.push(ConstantCheck::new("smoothed-indicator", "sup|f'(w)-f'(v)|", osc, Relation::AtMost, 1.0));
        let excess = smoothed_increment_excess(&sol, grid, x, eps);
        checks.push(ConstantCheck::new(
            "smoothed-indicator",
            "max |f'(w+t)-f'(w)| - (|w|+1)|t| - I(x-max(t,0) <= w <= x-min(t,0)+eps)",
            excess,
            Relation::AtMost,
            0.0,
        ));
    } else {
        checks.push(ConstantCheck::not_applicable("smoothed-indicator"));
    }

    Ok(checks)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Validation("grid needs at least two points".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::Validation("grid contains non-finite points".into()));
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Validation("grid must be strictly increasing".into()));
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if lo > -10.0 || hi < 10.0 {
        return Err(Error::Validation(format!("grid [{lo}, {hi}] does not cover [-10, 10]")));
    }
    let max_gap = grid.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    if max_gap > 1e-3 * (1.0 + 1e-9) {
        return Err(Error::Validation(format!("grid spacing {max_gap} exceeds 1e-3")));
    }
    Ok(())
}

const SHIFTS: [f64; 11] = [-2.0, -1.0, -0.5, -0.1, -0.01, 0.0, 0.01, 0.1, 0.5, 1.0, 2.0];

/// Largest violation of the increment bound for `w f_x(w)` over sampled
/// `(w, u, v)` triples (negative when the bound holds with room to spare).
fn increment_excess(sol: &SteinSolution, grid: &[f64], c: f64) -> f64 {
    let wf = |w: f64| w * sol.eval_f(w);
    grid.par_iter()
        .step_by(25)
        .map(|&w| {
            let mut worst = f64::NEG_INFINITY;
            for &u in &SHIFTS {
                for &v in &SHIFTS {
                    let lhs = (wf(w + u) - wf(w + v)).abs();
                    let rhs = (w.abs() + c) * (u.abs() + v.abs());
                    worst = worst.max(lhs - rhs);
                }
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest violation of the smoothed-indicator increment bound for `f'`.
fn smoothed_increment_excess(sol: &SteinSolution, grid: &[f64], x: f64, eps: f64) -> f64 {
    grid.par_iter()
        .step_by(25)
        .map(|&w| {
            let base = sol.eval_fprime(w);
            let mut worst = f64::NEG_INFINITY;
            for &t in &SHIFTS {
                let lhs = (sol.eval_fprime(w + t) - base).abs();
                let inside = x - t.max(0.0) <= w && w <= x - t.min(0.0) + eps;
                let rhs = (w.abs() + 1.0) * t.abs() + if inside { 1.0 } else { 0.0 };
                worst = worst.max(lhs - rhs);
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The bundled families certified by `verify-constants --family all`.
pub fn bundled_families() -> Vec<TestFunction> {
    let mut out: Vec<TestFunction> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&x| TestFunction::Indicator { x }).collect();
    out.push(TestFunction::SmoothedIndicator { x: 0.0, eps: 0.5 });
    out.push(TestFunction::SmoothedIndicator { x: -1.0, eps: 1.0 });
    out.push(TestFunction::Lipschitz(LipschitzFn::Abs { center: 0.0 }));
    out.push(TestFunction::Lipschitz(LipschitzFn::Abs { center: 1.0 }));
    out.push(TestFunction::Lipschitz(LipschitzFn::Sin));
    out.push(TestFunction::Lipschitz(LipschitzFn::Clip { level: 1.0 }));
    out.push(TestFunction::Bounded(BoundedFn::Tanh));
    out.push(TestFunction::Bounded(BoundedFn::Cos));
    out.push(TestFunction::Bounded(BoundedFn::Interval { lo: -1.0, hi: 0.5 }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_constant_minus_one() {
        let sol = solve_stein(TestFunction::Lipschitz(LipschitzFn::Identity)).unwrap();
        assert_eq!(sol.eh_z, 0.0);
        for &w in &[-30.0, -5.0, -1.0, 0.0, 0.3, 2.0, 9.0, 37.0] {
            assert!((sol.eval_f(w) + 1.0).abs() < 1e-10, "w={w} f={}", sol.eval_f(w));
            assert!(sol.eval_fprime(w).abs() < 1e-8, "w={w}");
        }
    }

    #[test]
    fn indicator_at_origin() {
        let sol = solve_stein(TestFunction::indicator(0.0)).unwrap();
        let expected = (2.0 * PI).sqrt() / 4.0;
        assert!((sol.eval_f(0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_gives_zero() {
        let sol = solve_stein(TestFunction::Bounded(BoundedFn::Constant { value: 3.5 })).unwrap();
        for &w in &[-40.0, -3.0, 0.0, 1.0, 50.0] {
            assert_eq!(sol.eval_f(w), 0.0);
        }
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["indicator:0", "smoothed:-1,0.5", "abs:1", "sin", "clip:2", "tanh", "cos", "interval:-1,0.5", "constant:3", "identity"] {
            let h: TestFunction = s.parse().unwrap();
            assert_eq!(h.to_string().parse::<TestFunction>().unwrap(), h);
        }
        assert!("smoothed:0,0".parse::<TestFunction>().is_err());
        assert!("indicator".parse::<TestFunction>().is_err());
        assert!("bogus".parse::<TestFunction>().is_err());
    }

    #[test]
    fn smoothed_expectation_closed_form() {
        let h = TestFunction::SmoothedIndicator { x: 0.3, eps: 0.7 };
        let quad = crate::gauss::quadrature::normal_expectation(&|z| h.eval(z), &[0.3, 1.0], 1e-14).unwrap();
        assert!((h.expectation().unwrap() - quad).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
        assert!(matches!(verify_constants(TestFunction::indicator(0.0), &grid), Err(Error::Validation(_))));
        let short: Vec<f64> = (0..=2000).map(|i| -1.0 + 1e-3 * i as f64).collect();
        assert!(matches!(verify_constants(TestFunction::indicator(0.0), &short), Err(Error::Validation(_))));
    }

    #[test]
    fn not_applicable_listed() {
        let checks = verify_constants(TestFunction::Lipschitz(LipschitzFn::Abs { center: 0.0 }), &standard_grid()).unwrap();
        let na: Vec<_> = checks.iter().filter(|c| c.status == CheckStatus::NotApplicable).map(|c| c.family.as_str()).collect();
        assert_eq!(na, vec!["bounded", "indicator", "smoothed-indicator"]);
        assert!(checks.iter().all(|c| c.passed()));
    }
}
