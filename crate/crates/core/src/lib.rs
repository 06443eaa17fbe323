//! Regional fractional Laplacian on the unit ball for radial data.

// Negated float comparisons are used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod poisson;
pub mod quadrature;
pub mod semilinear;
pub mod special;
