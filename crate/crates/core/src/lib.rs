//! Online gradient regression (OGR) and BFGS optimizers, an Armijo line
//! search, the nine classic test objectives and a seeded benchmark harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bfgs;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod linesearch;
pub mod ogr;
pub mod testfuns;

pub use error::{Error, Result};
