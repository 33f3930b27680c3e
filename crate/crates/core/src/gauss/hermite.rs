use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_INDEX: usize = 64;

/// Orthonormal Hermite functions `h_0, ..., h_J` on `L²(ℝ)`.
///
/// `h_n(t) = (√π 2ⁿ n!)^{-1/2} H_n(t) e^{-t²/2}` is the eigenfunction of
/// `A = -d²/dt² + t² + 1` with eigenvalue `2n + 2`. Values are produced by the
/// three-term recurrence on `h_n` itself, so neither `H_n(t)` nor `n!` is
/// ever formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermiteBasis {
    max_index: usize,
}

impl Default for HermiteBasis {
    fn default() -> Self {
        Self { max_index: DEFAULT_MAX_INDEX }
    }
}

impl HermiteBasis {
    pub fn new(max_index: usize) -> Self {
        Self { max_index }
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Eigenvalue `2n + 2` of `A` on `h_n`.
    pub fn eigenvalue(n: usize) -> f64 {
        2.0 * n as f64 + 2.0
    }

    /// `h_n(t)`; fails with a capacity error when `n` exceeds the basis.
    pub fn eval(&self, n: usize, t: f64) -> Result<f64> {
        if n > self.max_index {
            return Err(Error::Capacity(format!(
                "Hermite index {n} exceeds basis max_index {}",
                self.max_index
            )));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("Hermite function at non-finite t={t}")));
        }
        let mut out = vec![0.0; n + 1];
        fill_hermite_functions(t, &mut out);
        Ok(out[n])
    }

    /// All of `h_0(t), ..., h_J(t)`.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.max_index + 1];
        fill_hermite_functions(t, &mut out);
        out
    }
}

/// Writes `h_0(t), ..., h_{len-1}(t)` into `out`.
pub(crate) fn fill_hermite_functions(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * t * t).exp();
    if out.len() > 1 {
        out[1] = 2f64.sqrt() * t * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * t * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// `h_n(t)` for a basis of the default size.
pub fn hermite_fn(n: usize, t: f64) -> Result<f64> {
    HermiteBasis::default().eval(n, t)
}

/// Normalized probabilists' Hermite polynomial `He_n(x) / √(n!)`.
///
/// These are orthonormal under the standard Gaussian measure and are the
/// one-dimensional factors of the Wick basis.
pub(crate) fn normalized_he(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}
