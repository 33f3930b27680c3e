//! Finite Wiener–Itô chaos expansions in the Wick–Hermite basis.
//!
//! The white noise `x` is represented through its coordinates
//! `ξ_j = ⟨x, h_j⟩` in the Hermite function basis; under the white noise
//! measure these are i.i.d. standard normal. A functional is stored as
//!
//! ```text
//! φ = Σ_α c_α Ξ_α,   Ξ_α = Π_j He_{α_j}(ξ_j) / √(α_j!),
//! ```
//!
//! an orthonormal basis of `L²`. The chaos of order `n` is spanned by the
//! `Ξ_α` with `|α| = n`; in kernel terms `Ξ_α = I_n(h^{⊗α}) / √(α!)`, where
//! `h^{⊗α}` is the symmetrized tensor product with `α_j` factors `h_j`.
//!
//! Every `t`-integral of the continuous theory becomes a sum over `j`: the
//! Hida derivative is `∂_t φ = Σ_j h_j(t) a_j φ` with the annihilator
//! `a_j Ξ_α = √(α_j) Ξ_{α - e_j}`, so `∫ ∂_t φ ∂_t ψ dt = Σ_j a_j φ · a_j ψ`.

mod check;
mod eval;
mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::hermite::{fill_hermite_functions, normalized_he};
use crate::gauss::rng::RandomStream;
use crate::gauss::DEFAULT_MAX_INDEX;

pub use check::{directional_norm_bound, identity_checks, n_half_norm_sq, IdentityCheck, GRADIENT_STEP, GRADIENT_TOL, IDENTITY_TOL};
pub use eval::Evaluator;
pub use io::ChaosFile;

/// Highest chaos order a stored functional may reach.
pub const MAX_ORDER: usize = 16;
/// Highest basis index `j`.
pub const MAX_BASIS_INDEX: usize = DEFAULT_MAX_INDEX;

/// Multi-index `α`: strictly increasing basis indices with positive
/// multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct MultiIndex(Vec<(usize, usize)>);

impl MultiIndex {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `e_j`.
    pub fn unit(j: usize) -> Self {
        Self(vec![(j, 1)])
    }

    /// `m · e_j`.
    pub fn power(j: usize, m: usize) -> Self {
        if m == 0 {
            Self::empty()
        } else {
            Self(vec![(j, m)])
        }
    }

    /// Builds from `(j, α_j)` pairs; pairs must have distinct `j` and
    /// positive multiplicities. Order of the pairs is irrelevant.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Validation(format!("basis index {} repeated in multi-index", w[0].0)));
            }
        }
        if let Some(&(j, _)) = pairs.iter().find(|p| p.1 == 0) {
            return Err(Error::Validation(format!("zero multiplicity stored for basis index {j}")));
        }
        if let Some(&(j, _)) = pairs.iter().find(|p| p.0 > MAX_BASIS_INDEX) {
            return Err(Error::Capacity(format!("basis index {j} above {MAX_BASIS_INDEX}")));
        }
        let idx = Self(pairs);
        if idx.order() > MAX_ORDER {
            return Err(Error::Capacity(format!("chaos order {} above {MAX_ORDER}", idx.order())));
        }
        Ok(idx)
    }

    /// `|α| = Σ_j α_j`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|p| p.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `α_j`.
    pub fn get(&self, j: usize) -> usize {
        self.0.binary_search_by_key(&j, |p| p.0).map(|i| self.0[i].1).unwrap_or(0)
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().map(|p| p.0)
    }

    /// `α - e_j`, or `None` when `α_j = 0`.
    pub fn lowered(&self, j: usize) -> Option<Self> {
        let i = self.0.binary_search_by_key(&j, |p| p.0).ok()?;
        let mut v = self.0.clone();
        if v[i].1 == 1 {
            v.remove(i);
        } else {
            v[i].1 -= 1;
        }
        Some(Self(v))
    }
}

impl TryFrom<Vec<(usize, usize)>> for MultiIndex {
    type Error = Error;

    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MultiIndex> for Vec<(usize, usize)> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self.0.iter().map(|&(j, m)| if m == 1 { format!("e{j}") } else { format!("{m}e{j}") }).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Finitely supported real vector `η_j = ⟨η, h_j⟩`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffVector {
    coeffs: BTreeMap<usize, f64>,
}

impl CoeffVector {
    pub fn new(coeffs: BTreeMap<usize, f64>) -> Self {
        Self { coeffs }
    }

    /// `η_j = values[j]`.
    pub fn from_dense(values: &[f64]) -> Self {
        Self { coeffs: values.iter().copied().enumerate().collect() }
    }

    pub fn get(&self, j: usize) -> f64 {
        self.coeffs.get(&j).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.coeffs.contains_key(&j)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(&j, &v)| (j, v))
    }

    /// `|η|_p = (Σ_j (2j+2)^{2p} η_j²)^{1/2}`.
    pub fn norm_p(&self, p: f64) -> f64 {
        self.iter().map(|(j, v)| (2.0 * j as f64 + 2.0).powf(2.0 * p) * v * v).fold(0.0, |a, x| a + x).sqrt()
    }
}

/// A finite chaos expansion `φ = Σ_α c_α Ξ_α`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChaosFunctional {
    terms: BTreeMap<MultiIndex, f64>,
}

impl ChaosFunctional {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([(MultiIndex::empty(), c)])
    }

    /// `Ξ_α`.
    pub fn basis(alpha: MultiIndex) -> Self {
        Self::from_terms([(alpha, 1.0)])
    }

    /// First-chaos functional `Σ_j η_j ξ_j = ⟨x, η⟩`.
    pub fn linear(eta: &CoeffVector) -> Self {
        Self::from_terms(eta.iter().map(|(j, v)| (MultiIndex::unit(j), v)))
    }

    /// Sums coefficients of repeated multi-indices and drops exact zeros.
    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, f64)>>(terms: I) -> Self {
        let mut map = BTreeMap::new();
        for (a, c) in terms {
            *map.entry(a).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Self { terms: map }
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// `E φ = c_∅`.
    pub fn mean(&self) -> f64 {
        self.coeff(&MultiIndex::empty())
    }

    /// Highest order present (0 for constants and for zero).
    pub fn order(&self) -> usize {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    /// Basis indices that occur in some multi-index.
    pub fn active_coords(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.terms.keys().flat_map(|a| a.entries().iter().map(|p| p.0)).collect();
        set.into_iter().collect()
    }

    /// Number of basis coordinates needed, `1 + max j` (0 for constants).
    pub fn basis_dim(&self) -> usize {
        self.terms.keys().filter_map(MultiIndex::max_index).max().map_or(0, |j| j + 1)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(a, c)| (a.clone(), s * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).map(|(a, c)| (a.clone(), *c)))
    }

    /// `E[φψ] = Σ_α c^φ_α c^ψ_α`.
    pub fn inner(&self, other: &Self) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.terms.iter().map(|(a, c)| c * large.coeff(a)).sum()
    }

    /// `‖φ‖_{2,p} = (Σ_α c_α² Π_j (2j+2)^{2p α_j})^{1/2}`.
    pub fn norm_2p(&self, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| {
                let w: f64 = a.entries().iter().map(|&(j, m)| (2.0 * j as f64 + 2.0).powf(2.0 * p * m as f64)).product();
                c * c * w
            })
            .fold(0.0, |a, x| a + x)
            .sqrt()
    }

    /// `φ(ξ)`; every active coordinate must be present in `xi`.
    pub fn evaluate(&self, xi: &CoeffVector) -> Result<f64> {
        let mut total = 0.0;
        for (a, c) in &self.terms {
            let mut prod = *c;
            for &(j, m) in a.entries() {
                if !xi.contains(j) {
                    return Err(Error::Domain(format!("coordinate {j} missing from evaluation point")));
                }
                prod *= normalized_he(m, xi.get(j));
            }
            total += prod;
        }
        Ok(total)
    }

    /// `Sφ(η) = Σ_α c_α Π_j η_j^{α_j} / √(α_j!)`, the chaos form of
    /// `e^{-|η|²/2} E[φ e^{⟨x,η⟩}]`.
    pub fn s_transform(&self, eta: &CoeffVector) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| {
                c * a.entries().iter().map(|&(j, m)| eta.get(j).powi(m as i32) / factorial(m).sqrt()).product::<f64>()
            })
            .sum()
    }

    /// `N φ`: multiplies the chaos of order `n` by `n`.
    pub fn number_op(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(a, c)| (a.clone(), a.order() as f64 * c)))
    }

    /// `N⁻¹ φ` for centered `φ`.
    pub fn inv_number_op(&self) -> Result<Self> {
        let mean = self.mean();
        if mean != 0.0 {
            return Err(Error::Precondition(format!("N^-1 needs a centered functional, E[phi] = {mean}")));
        }
        Ok(Self::from_terms(self.terms.iter().map(|(a, c)| (a.clone(), c / a.order() as f64))))
    }

    /// `a_j φ = ∂_{h_j} φ`.
    pub fn annihilate(&self, j: usize) -> Self {
        Self::from_terms(
            self.terms.iter().filter_map(|(a, c)| a.lowered(j).map(|lower| (lower, (a.get(j) as f64).sqrt() * c))),
        )
    }

    /// All nonzero annihilations `{a_j φ}_j`.
    pub fn hida_derivative(&self) -> HidaDerivative {
        let components = self
            .active_coords()
            .into_iter()
            .map(|j| (j, self.annihilate(j)))
            .filter(|(_, c)| !c.is_empty())
            .collect();
        HidaDerivative { components }
    }

    /// `∂_η φ = Σ_j η_j a_j φ`.
    pub fn directional_derivative(&self, eta: &CoeffVector) -> Self {
        self.hida_derivative().directional(eta)
    }

    /// Exact product, linearized coordinatewise by
    /// `Ξ_m Ξ_n = Σ_r √(m! n! (m+n-2r)!) / (r! (m-r)! (n-r)!) Ξ_{m+n-2r}`.
    ///
    /// Contributions to each output coefficient are gathered in sorted
    /// multi-index order and summed pairwise, so results are bit-reproducible.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let order = self.order() + other.order();
        if order > MAX_ORDER {
            return Err(Error::Capacity(format!("product order {order} above {MAX_ORDER}")));
        }
        let mut parts: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                for (idx, w) in product_expansion(a, b) {
                    parts.entry(idx).or_default().push(ca * cb * w);
                }
            }
        }
        Ok(Self::from_terms(parts.into_iter().map(|(a, v)| (a, pairwise_sum(&v)))))
    }

    /// `(E[⟨x,h⟩ φ], E[∂_h φ])`; equal by Gaussian integration by parts.
    pub fn ibp_check(&self, h: &CoeffVector) -> Result<(f64, f64)> {
        let lhs = ChaosFunctional::linear(h).multiply(self)?.mean();
        let rhs = self.directional_derivative(h).mean();
        Ok((lhs, rhs))
    }

    /// Random sparse functional for testing: `terms` multi-indices of order
    /// `1..=max_order` over coordinates `0..basis`, standard normal
    /// coefficients, plus a constant term unless `centered`.
    pub fn random_sparse(stream: RandomStream, terms: usize, max_order: usize, basis: usize, centered: bool) -> Self {
        let mut r = stream.reader(0);
        let pick = |r: &mut crate::gauss::rng::WordReader, n: usize| ((r.next_unit() * n as f64) as usize).min(n - 1);
        let mut out = Vec::with_capacity(terms + 1);
        for _ in 0..terms {
            let order = 1 + pick(&mut r, max_order.max(1));
            let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
            for _ in 0..order {
                *mult.entry(pick(&mut r, basis.max(1))).or_insert(0) += 1;
            }
            let idx = MultiIndex::new(mult.into_iter().collect()).expect("within caps");
            out.push((idx, r.next_normal()));
        }
        if !centered {
            out.push((MultiIndex::empty(), r.next_normal()));
        }
        Self::from_terms(out)
    }
}

impl fmt::Display for ChaosFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(a, c)| format!("{c}·Ξ[{a}]")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// The Hida derivative of `φ` through its components `a_j φ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HidaDerivative {
    pub components: BTreeMap<usize, ChaosFunctional>,
}

impl HidaDerivative {
    /// `∂_η φ = Σ_j η_j a_j φ`.
    pub fn directional(&self, eta: &CoeffVector) -> ChaosFunctional {
        ChaosFunctional::from_terms(
            self.components.iter().flat_map(|(&j, c)| {
                let s = eta.get(j);
                c.terms.iter().map(move |(a, v)| (a.clone(), s * v))
            }),
        )
    }

    /// `∂_t φ = Σ_j h_j(t) a_j φ`.
    pub fn at_t(&self, t: f64) -> ChaosFunctional {
        let top = self.components.keys().next_back().map_or(0, |j| j + 1);
        let mut h = vec![0.0; top];
        fill_hermite_functions(t, &mut h);
        self.directional(&CoeffVector::from_dense(&h))
    }

    /// `Σ_j ‖a_j φ‖²_{2,0} = ∫ ‖∂_t φ‖²_{2,0} dt`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.components.values().map(|c| c.inner(c)).sum()
    }
}

/// `n!` in floating point (exact through 22!).
pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// One-coordinate linearization weights `(k, w)` of `Ξ_m Ξ_n = Σ w Ξ_k`.
fn hermite_product(m: usize, n: usize) -> Vec<(usize, f64)> {
    let root = (factorial(m) * factorial(n)).sqrt();
    (0..=m.min(n))
        .map(|r| {
            let k = m + n - 2 * r;
            (k, root * factorial(k).sqrt() / (factorial(r) * factorial(m - r) * factorial(n - r)))
        })
        .collect()
}

fn product_expansion(a: &MultiIndex, b: &MultiIndex) -> Vec<(MultiIndex, f64)> {
    // Per-coordinate options, then their tensor product.
    let mut coords: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &(j, m) in a.entries() {
        coords.entry(j).or_default().0 = m;
    }
    for &(j, m) in b.entries() {
        coords.entry(j).or_default().1 = m;
    }
    let mut acc: Vec<(Vec<(usize, usize)>, f64)> = vec![(Vec::new(), 1.0)];
    for (j, (m, n)) in coords {
        let opts = hermite_product(m, n);
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for (pairs, w) in &acc {
            for &(k, wk) in &opts {
                let mut p = pairs.clone();
                if k > 0 {
                    p.push((j, k));
                }
                next.push((p, w * wk));
            }
        }
        acc = next;
    }
    acc.into_iter().map(|(p, w)| (MultiIndex(p), w)).collect()
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// `ω_r = (sup_{n ≥ 1} n 4^{-nr})^{1/2}`.
///
/// `n ↦ n 4^{-nr}` increases up to `1/(r ln 4)` and decreases after, so the
/// supremum over integers sits at one of the two integers around that point.
pub fn omega_r(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("omega_r needs r > 0, got {r}")));
    }
    let ln4 = 4f64.ln();
    let value = |n: f64| n * (-n * r * ln4).exp();
    let peak = 1.0 / (r * ln4);
    let lo = peak.floor().max(1.0);
    let best = value(lo).max(value(lo + 1.0));
    Ok(best.sqrt())
}
