//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export takes plain numbers or strings and returns a JSON string, so
//! the page needs no generated type glue beyond `wasm-bindgen`'s own. The
//! `*_json` functions hold the logic and are usable (and tested) natively.

use serde::Serialize;
use stein_chaos::chaos::ChaosFunctional;
use stein_chaos::distance::{tv_to_normal_density, Density};
use stein_chaos::functional::chi2_bounds;
use stein_chaos::gauss::rng::RandomStream;
use stein_chaos::hida::{bound_vs_empirical, carre_bound, BoundOptions};
use stein_chaos::stein::{solve_stein, TestFunction};
use stein_chaos::{Error, Metric, Result};
use wasm_bindgen::prelude::*;

/// Points per curve are capped so a typo in the step cannot freeze the tab.
pub const MAX_POINTS: usize = 4001;
pub const MAX_SAMPLES: usize = 1_000_000;
pub const MAX_CURVE_N: usize = 4096;

#[derive(Debug, Serialize)]
pub struct SteinCurve {
    pub h: String,
    pub w: Vec<f64>,
    pub f: Vec<f64>,
    pub fprime: Vec<f64>,
    pub sup_f: f64,
    pub sup_fprime: f64,
}

/// The Stein solution `f_h` and its derivative on `points` equispaced
/// abscissae of `[from, to]`.
pub fn stein_curve_json(h: &str, from: f64, to: f64, points: usize) -> Result<String> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(Error::Domain(format!("need finite from < to, got [{from}, {to}]")));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(Error::Domain(format!("points must lie in 2..={MAX_POINTS}, got {points}")));
    }
    let test_fn: TestFunction = h.parse()?;
    let sol = solve_stein(test_fn)?;
    let step = (to - from) / (points - 1) as f64;
    let w: Vec<f64> = (0..points).map(|i| from + step * i as f64).collect();
    let f: Vec<f64> = w.iter().map(|&x| sol.eval_f(x)).collect();
    let fprime: Vec<f64> = w.iter().map(|&x| sol.eval_fprime(x)).collect();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let curve = SteinCurve { h: h.to_string(), sup_f: sup(&f), sup_fprime: sup(&fprime), w, f, fprime };
    to_json(&curve)
}

#[derive(Debug, Serialize)]
pub struct Chi2Row {
    pub n: usize,
    pub d_w_bound: f64,
    pub d_k_bound: f64,
    pub d_tv_bound: f64,
    /// Exact total variation distance of the standardized χ²_n law.
    pub d_tv: f64,
}

/// Closed-form bounds for `(χ²_n - n)/√(2n)` next to its exact total
/// variation distance, for `n = 1 ..= n_max` on a roughly geometric grid.
pub fn chi2_curve_json(n_max: usize) -> Result<String> {
    if !(1..=MAX_CURVE_N).contains(&n_max) {
        return Err(Error::Domain(format!("n_max must lie in 1..={MAX_CURVE_N}, got {n_max}")));
    }
    let mut ns = Vec::new();
    let mut n = 1usize;
    while n <= n_max {
        ns.push(n);
        n = (n + 1).max((n as f64 * 1.25).round() as usize);
    }
    if ns.last() != Some(&n_max) {
        ns.push(n_max);
    }
    let rows = ns
        .into_iter()
        .map(|n| {
            let b = chi2_bounds(n)?;
            let nu = u32::try_from(n).map_err(|_| Error::Domain("n too large".into()))?;
            let tv = tv_to_normal_density(&Density::StandardizedChiSquare { n: nu })?;
            Ok(Chi2Row { n, d_w_bound: b.d_w, d_k_bound: b.d_k, d_tv_bound: b.d_tv, d_tv: tv.estimate })
        })
        .collect::<Result<Vec<_>>>()?;
    to_json(&rows)
}

/// The chaos bound `θ · E|1 - Γ|` for a functional in the chaos JSON format,
/// with the empirical distance of `samples` draws when the metric allows it.
pub fn chaos_bound_json(functional: &str, metric: &str, samples: usize, seed: u64) -> Result<String> {
    if samples > MAX_SAMPLES {
        return Err(Error::Domain(format!("at most {MAX_SAMPLES} samples in the browser, got {samples}")));
    }
    let phi = ChaosFunctional::from_json(functional)?;
    let metric: Metric = metric.parse()?;
    let stream = RandomStream::new(seed, 0);
    let opts = BoundOptions::default();
    let report = if metric == Metric::TotalVariation || samples < 2 {
        carre_bound(&phi, metric, stream, samples, &opts)?
    } else {
        bound_vs_empirical(&phi, metric, stream, samples, &opts)?
    };
    to_json(&report)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Parse(e.to_string()))
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = steinCurve)]
pub fn stein_curve(h: &str, from: f64, to: f64, points: usize) -> std::result::Result<String, JsError> {
    js(stein_curve_json(h, from, to, points))
}

#[wasm_bindgen(js_name = chi2Curve)]
pub fn chi2_curve(n_max: usize) -> std::result::Result<String, JsError> {
    js(chi2_curve_json(n_max))
}

#[wasm_bindgen(js_name = chaosBound)]
pub fn chaos_bound(functional: &str, metric: &str, samples: usize, seed: u64) -> std::result::Result<String, JsError> {
    js(chaos_bound_json(functional, metric, samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_ranges() {
        assert!(stein_curve_json("indicator:0", 1.0, -1.0, 10).is_err());
        assert!(stein_curve_json("indicator:0", -1.0, 1.0, 1).is_err());
        assert!(stein_curve_json("nonsense", -1.0, 1.0, 10).is_err());
        assert!(chi2_curve_json(0).is_err());
        assert!(chaos_bound_json("{}", "w", MAX_SAMPLES + 1, 1).is_err());
    }

    #[test]
    fn chi2_grid_ends_at_n_max() {
        let v: serde_json::Value = serde_json::from_str(&chi2_curve_json(50).unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows[0]["n"], 1);
        assert_eq!(rows.last().unwrap()["n"], 50);
    }
}
