//! Tables of bounds against empirical distances as `n` grows, for plotting
//! with external tools.

use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{bootstrap_std_error, kolmogorov_to_normal, wasserstein_to_normal};
use crate::error::{Error, Result};
use crate::functional::chi2_bounds;
use crate::gauss::RandomStream;
use crate::hida::BOOTSTRAP_REPLICATES;
use crate::indep::{simulate_sum, wasserstein_bound_indep, IndepSumModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    /// Standardized `χ²(n)` with the closed-form bounds.
    Chi2Bounds,
    /// `n` i.i.d. Rademacher summands with the `3 Σ E|X|³` bound.
    IndepSumBounds,
}

impl FromStr for CurveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2_bounds" | "chi2-bounds" | "chi2" => Ok(CurveFamily::Chi2Bounds),
            "indep_sum_bounds" | "indep-sum-bounds" | "indep-sum" => Ok(CurveFamily::IndepSumBounds),
            _ => Err(Error::Parse(format!("unknown curve family '{s}' (chi2_bounds, indep_sum_bounds)"))),
        }
    }
}

/// One row; bounds that the family does not provide are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub d_w_bound: Option<f64>,
    pub d_k_bound: Option<f64>,
    pub d_tv_bound: Option<f64>,
    pub empirical_d_w: Option<f64>,
    pub empirical_d_k: Option<f64>,
    /// Larger of the two bootstrap standard errors of the empirical columns.
    pub mc_std_error: Option<f64>,
}

impl CurveRow {
    /// Empirical columns within their bounds up to three standard errors.
    pub fn empirical_within_bounds(&self) -> bool {
        let slack = 3.0 * self.mc_std_error.unwrap_or(0.0);
        let ok = |e: Option<f64>, b: Option<f64>| match (e, b) {
            (Some(e), Some(b)) => e <= b + slack,
            _ => true,
        };
        ok(self.empirical_d_w, self.d_w_bound) && ok(self.empirical_d_k, self.d_k_bound)
    }
}

pub const CURVE_HEADER: &str = "n,d_W_bound,d_K_bound,d_TV_bound,empirical_d_W,empirical_d_K,mc_std_error";

/// Builds the table; row `i` simulates with `stream.substream(i)` when
/// `samples > 0`, otherwise the empirical columns stay empty.
pub fn emit_curve(family: CurveFamily, n_values: &[usize], stream: RandomStream, samples: usize) -> Result<Vec<CurveRow>> {
    if n_values.is_empty() {
        return Err(Error::Domain("emit_curve needs at least one n".into()));
    }
    n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (model, d_w, d_k, d_tv) = match family {
                CurveFamily::Chi2Bounds => {
                    let b = chi2_bounds(n)?;
                    (IndepSumModel::chi_square(n)?, Some(b.d_w), Some(b.d_k), Some(b.d_tv))
                }
                CurveFamily::IndepSumBounds => {
                    if n == 0 {
                        return Err(Error::Domain("number of summands must be positive".into()));
                    }
                    let m = IndepSumModel::rademacher(n)?;
                    let b = wasserstein_bound_indep(&m);
                    (m, Some(b), None, None)
                }
            };
            let mut row = CurveRow {
                n,
                d_w_bound: d_w,
                d_k_bound: d_k,
                d_tv_bound: d_tv,
                empirical_d_w: None,
                empirical_d_k: None,
                mc_std_error: None,
            };
            if samples >= 2 {
                let s = stream.substream(i as u64);
                let set = simulate_sum(&model, s.substream(0), samples)?;
                row.empirical_d_w = Some(wasserstein_to_normal(&set)?.estimate);
                row.empirical_d_k = Some(kolmogorov_to_normal(&set)?.estimate);
                let se_w = bootstrap_std_error(&set, crate::Metric::Wasserstein, BOOTSTRAP_REPLICATES, s.substream(1))?;
                let se_k = bootstrap_std_error(&set, crate::Metric::Kolmogorov, BOOTSTRAP_REPLICATES, s.substream(2))?;
                row.mc_std_error = Some(se_w.max(se_k));
            }
            Ok(row)
        })
        .collect()
}

/// CSV with [`CURVE_HEADER`]; absent values are empty cells and numbers use
/// shortest round-trip formatting.
pub fn curve_csv(rows: &[CurveRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            cell(r.d_w_bound),
            cell(r.d_k_bound),
            cell(r.d_tv_bound),
            cell(r.empirical_d_w),
            cell(r.empirical_d_k),
            cell(r.mc_std_error)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_columns_halve_when_n_quadruples() {
        let rows = emit_curve(CurveFamily::Chi2Bounds, &[10, 40, 160], RandomStream::new(0, 0), 0).unwrap();
        for w in rows.windows(2) {
            assert!((w[1].d_w_bound.unwrap() / w[0].d_w_bound.unwrap() - 0.5).abs() < 1e-15);
            assert!((w[1].d_k_bound.unwrap() / w[0].d_k_bound.unwrap() - 0.5).abs() < 1e-15);
            assert!((w[1].d_tv_bound.unwrap() / w[0].d_tv_bound.unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn chi2_k_bound_at_100() {
        let rows = emit_curve(CurveFamily::Chi2Bounds, &[100], RandomStream::new(0, 0), 0).unwrap();
        assert!((rows[0].d_k_bound.unwrap() - 2f64.sqrt() / 10.0).abs() < 1e-16);
    }

    #[test]
    fn empirical_below_bounds() {
        let rows = emit_curve(CurveFamily::IndepSumBounds, &[4, 16], RandomStream::new(5, 0), 20_000).unwrap();
        assert!(rows.iter().all(CurveRow::empirical_within_bounds));
        let csv = curve_csv(&rows);
        assert!(csv.starts_with(CURVE_HEADER));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().contains(",,"));
    }

    #[test]
    fn empty_n_rejected() {
        assert!(emit_curve(CurveFamily::Chi2Bounds, &[], RandomStream::new(0, 0), 0).is_err());
    }
}
