//! Numerical checks of the exact chaos identities for one functional.

use serde::{Deserialize, Serialize};

use super::{omega_r, ChaosFunctional, CoeffVector, MAX_ORDER};
use crate::error::Result;
use crate::gauss::RandomStream;
use crate::stein::{CheckStatus, Relation};

/// Absolute tolerance of the coefficient identities, scaled by `max(1, |rhs|)`.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative tolerance of the finite-difference gradient check.
pub const GRADIENT_TOL: f64 = 1e-7;
/// Step of the central difference in the gradient check.
pub const GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub status: CheckStatus,
}

impl IdentityCheck {
    fn equal(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let tolerance = tol * rhs.abs().max(1.0);
        let ok = (lhs - rhs).abs() <= tolerance;
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::Equal,
            tolerance,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        let tolerance = IDENTITY_TOL * rhs.abs().max(1.0);
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::AtMost,
            tolerance,
            status: if lhs <= rhs + tolerance { CheckStatus::Pass } else { CheckStatus::Fail },
        }
    }

    fn skipped(name: &str, relation: Relation) -> Self {
        Self { name: name.into(), lhs: f64::NAN, rhs: f64::NAN, relation, tolerance: 0.0, status: CheckStatus::NotApplicable }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// `‖∂_η φ‖_{2,q}` and `ω_{p-q} 2^{p-q} ‖φ‖_{2,p} |η|_{-p}` for `q < p`.
pub fn directional_norm_bound(phi: &ChaosFunctional, eta: &CoeffVector, p: f64, q: f64) -> Result<(f64, f64)> {
    let r = p - q;
    let lhs = phi.directional_derivative(eta).norm_2p(q);
    let rhs = omega_r(r)? * 2f64.powf(r) * phi.norm_2p(p) * eta.norm_p(-p);
    Ok((lhs, rhs))
}

/// `Σ_α |α| c_α²`.
pub fn n_half_norm_sq(phi: &ChaosFunctional) -> f64 {
    phi.terms().iter().map(|(a, c)| a.order() as f64 * c * c).sum()
}

/// Runs every identity that applies to `phi`. Auxiliary random objects (a
/// second functional, directions, an evaluation point) come from `stream`.
pub fn identity_checks(phi: &ChaosFunctional, stream: RandomStream) -> Result<Vec<IdentityCheck>> {
    let coords = phi.active_coords();
    let basis = phi.basis_dim().max(1);
    let mut out = Vec::new();
    let sum_sq: f64 = phi.terms().values().map(|c| c * c).sum();
    let n_half = n_half_norm_sq(phi);

    if 2 * phi.order() <= MAX_ORDER {
        out.push(IdentityCheck::equal("parseval E[phi^2] = sum c^2", phi.multiply(phi)?.mean(), sum_sq, IDENTITY_TOL));
    } else {
        out.push(IdentityCheck::skipped("parseval E[phi^2] = sum c^2", Relation::Equal));
    }

    let n_phi = phi.number_op();
    let eigen_gap = phi.terms().iter().map(|(a, c)| (n_phi.coeff(a) - a.order() as f64 * c).abs()).fold(0.0, f64::max);
    out.push(IdentityCheck::equal("number operator eigenrelation", eigen_gap, 0.0, IDENTITY_TOL));

    let d = phi.hida_derivative();
    out.push(IdentityCheck::equal("sum_j |a_j phi|^2 = |N^1/2 phi|^2", d.l2_norm_sq(), n_half, IDENTITY_TOL));

    let psi = ChaosFunctional::random_sparse(stream.substream(1), phi.len().max(1), phi.order().max(1), basis, false);
    let rhs: f64 = d.components.iter().map(|(&j, a)| a.inner(&psi.annihilate(j))).sum();
    out.push(IdentityCheck::equal("<N phi, psi> = sum_j <a_j phi, a_j psi>", n_phi.inner(&psi), rhs, IDENTITY_TOL));

    let mut r = stream.substream(2).reader(0);
    let h = CoeffVector::new(coords.iter().map(|&j| (j, r.next_normal())).collect());
    if phi.order() < MAX_ORDER {
        let (lhs, rhs) = phi.ibp_check(&h)?;
        out.push(IdentityCheck::equal("integration by parts E[<x,h> phi] = E[D_h phi]", lhs, rhs, IDENTITY_TOL));
    } else {
        out.push(IdentityCheck::skipped("integration by parts E[<x,h> phi] = E[D_h phi]", Relation::Equal));
    }

    if phi.mean() == 0.0 {
        let back = phi.inv_number_op()?.number_op();
        let gap = phi.terms().iter().map(|(a, c)| (back.coeff(a) - c).abs()).fold(0.0, f64::max);
        out.push(IdentityCheck::equal("N N^-1 phi = phi", gap, 0.0, IDENTITY_TOL));
        match crate::hida::carre_functional(phi) {
            Ok(gamma) => out.push(IdentityCheck::equal("E[Gamma] = |phi|^2", gamma.mean(), sum_sq, IDENTITY_TOL)),
            Err(_) => out.push(IdentityCheck::skipped("E[Gamma] = |phi|^2", Relation::Equal)),
        }
    } else {
        out.push(IdentityCheck::skipped("N N^-1 phi = phi", Relation::Equal));
        out.push(IdentityCheck::skipped("E[Gamma] = |phi|^2", Relation::Equal));
    }

    let (lhs, rhs) = directional_norm_bound(phi, &h, 1.0, 0.0)?;
    out.push(IdentityCheck::at_most("|D_h phi|_{2,0} <= w_1 2 |phi|_{2,1} |h|_{-1}", lhs, rhs));

    if phi.order() <= 4 {
        let xi: Vec<f64> = coords.iter().map(|_| r.next_normal()).collect();
        let point = |s: f64| CoeffVector::new(coords.iter().zip(&xi).map(|(&j, &x)| (j, x + s * h.get(j))).collect());
        let analytic = phi.directional_derivative(&h).evaluate(&point(0.0))?;
        let fd = (phi.evaluate(&point(GRADIENT_STEP))? - phi.evaluate(&point(-GRADIENT_STEP))?) / (2.0 * GRADIENT_STEP);
        out.push(IdentityCheck::equal("D_h phi = finite difference", fd, analytic, GRADIENT_TOL));
    } else {
        out.push(IdentityCheck::skipped("D_h phi = finite difference", Relation::Equal));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_functionals_pass() {
        for seed in 0..30 {
            let phi = ChaosFunctional::random_sparse(RandomStream::new(seed, 0), 8, 4, 6, seed % 3 == 0);
            for c in identity_checks(&phi, RandomStream::new(seed, 1)).unwrap() {
                assert!(c.passed(), "seed {seed}: {c:?}");
            }
        }
    }
}
