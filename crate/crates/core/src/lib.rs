//! Numerical laboratory for the bi-Lipschitz geometry of complex surface germs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod brieskorn;
pub mod density;
pub mod conical;
pub mod fit;
pub mod inner_metric;
pub mod rng;
pub mod scalar;
pub mod separating;
pub mod variety;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision points and germs.
pub type Point3 = variety::ComplexPoint3<f64>;
pub type Germ = variety::HypersurfaceGerm<f64>;
