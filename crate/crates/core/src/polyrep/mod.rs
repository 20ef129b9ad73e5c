//! Polynomial representations: univariate factors, CP-form polynomials and
//! their dense expansion.

mod cp;
mod dense;
pub mod instances;
mod univariate;

pub use cp::{CpPoly, CpPolyJson, DEFAULT_EXPANSION_BUDGET};
pub use dense::{DensePoly, Monomial};
pub use instances::{bernstein_instance, monomial_instance, rank_two_example};
pub use univariate::{Basis, UniPoly};

pub(crate) use univariate::binomial;
