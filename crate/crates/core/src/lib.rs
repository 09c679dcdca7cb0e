//! Numerical curvature engine for m-th root Cartan metrics
//! `K(x,p) = (a^{i_1...i_m}(x) p_{i_1} ... p_{i_m})^{1/m}` with polynomial
//! coefficients: fundamental and angular metrics, Cartan torsion, the spray
//! and Berwald hierarchy, Landsberg/E/S/H curvatures, geodesic flows, and a
//! least-squares classifier for the isotropy ansaetze.

// `!(err <= tol)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod geodesic;
pub mod linalg;
pub mod metric;
pub mod ode;
pub mod oracle;
pub mod poly;
pub mod spray;
pub mod suite;
pub mod symtensor;

pub use error::{Error, Result};
pub use metric::{EvalPoint, MetricBundle, MetricSpec};
pub use poly::PolyField;
pub use symtensor::{DenseTensor, MultiIndex, SymCoeffTensor, SymValueTensor};
