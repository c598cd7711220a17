//! Non-parametric regular-vine copula density estimation and copula-based
//! domain adaptation for regression.

// Float checks are written `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod baseline;
pub mod bicopula;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod mmd;
pub mod model;
pub mod regress;
pub mod rvine;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
