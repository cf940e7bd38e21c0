// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod biorth;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod models;

pub use error::{Error, Result};

/// A point in the three-dimensional parameter space.
pub type Point3 = [f64; 3];
