//! Normal approximation by Stein's method, with a finite Wiener–Itô chaos
//! calculus for computing explicit error bounds on Gaussian functionals.
//!
//! The crate is organized bottom-up:
//!
//! * [`gauss`]: normal distribution primitives, Hermite functions, quadrature
//!   rules and reproducible counter-based random streams.
//! * [`stein`]: solutions of the Stein equation `f'(w) - w f(w) = h(w) - E h(Z)`
//!   and grid certification of their boundedness constants.
//! * [`distance`]: Wasserstein, Kolmogorov and total-variation distances to
//!   the standard normal law.
//! * [`indep`]: Stein kernels and the `3 Σ E|X_i|³` Wasserstein bound for sums
//!   of independent summands.
//! * [`functional`]: Gaussian-interpolation Stein identities for `W = ψ(Z)`.
//! * [`chaos`]: chaos expansions in the Wick–Hermite basis with the number
//!   operator, Hida derivatives and exact products.
//! * [`hida`]: the chaos-level bound `θ · E|1 - Σ_j a_j(N⁻¹φ) a_j(φ)|`.
//! * [`curve`]: bound-versus-empirical tables for plotting.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod curve;
pub mod distance;
pub mod error;
pub mod functional;
pub mod gauss;
pub mod hida;
pub mod indep;
pub mod metric;
pub mod stein;

pub use error::{Error, Result};
pub use metric::Metric;
