//! Compressed sparse rows and a banded LU with partial pivoting.
//!
//! The stream-function systems are assembled as [`CsrMatrix`] products and
//! factored once per solve by [`BandedLu`], which also solves with the
//! transposed matrix for the discrete adjoint.

mod banded;
mod sparse;

pub use banded::BandedLu;
pub use sparse::{CsrMatrix, Triplets};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
