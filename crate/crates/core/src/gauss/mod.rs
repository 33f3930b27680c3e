//! Standard-normal primitives shared by every other module.

pub mod hermite;
pub mod normal;
pub mod quadrature;
pub mod rng;

pub use hermite::{hermite_fn, HermiteBasis, DEFAULT_MAX_INDEX};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use quadrature::{gauss_hermite_nodes, gauss_legendre, QuadratureKind, QuadratureRule};
pub use rng::{sample_std_normal, RandomStream};
