//! Volume comparison toolkit for homogeneous Riemannian products.

// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod geodesic;
pub mod invariants;
pub mod jacobi;
pub mod model_spaces;
pub mod monotonicity;
pub mod quadrature;
pub mod registry;
pub mod report;
pub mod sn;
pub mod sphere;

pub use error::{Error, Result};
