//! Covariance-matrix simulation of single-mode Gaussian channels, their
//! entanglement degradation, and Gaussian error-correcting codes.
//!
//! Quadratures are ordered `(x1, p1, ..., xn, pn)`; the vacuum covariance
//! matrix is the identity. All logarithms are base 2.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod entanglement;
pub mod choi;
pub mod error;
pub mod exec;
pub mod gecc;
mod matrix;
pub mod optimize;
pub mod search;
pub mod sweep;
pub mod symplectic;

pub use error::{Error, Result};
pub use matrix::{from_rows, to_rows};
