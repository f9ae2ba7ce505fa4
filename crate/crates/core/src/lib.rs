//! Sum-of-squared-logarithms inequality toolkit.
//!
//! For positive triples `y`, `a` with equal products, `e1(y) >= e1(a)` and
//! `e2(y) >= e2(a)` imply `sum (log y_i)^2 >= sum (log a_i)^2`. This crate
//! checks that statement in each of its equivalent forms (tuples, means,
//! exponentials, characteristic-polynomial coefficients, Frobenius norms),
//! evaluates the auxiliary functions used in its proof, runs randomized
//! campaigns for the theorem and its n-dimensional generalisation, and
//! provides the small dense matrix layer (SPD logarithm, polar decomposition,
//! Hencky strain) the matrix statements need.
//!
//! Modules:
//! - [`symtuple`]: sorted tuples, elementary symmetric polynomials, means, majorization
//! - [`formulation`]: hypothesis/conclusion checkers returning [`HypothesisReport`]
//! - [`lemma`]: the spherical parametrisation and monotonicity functions of the proof
//! - [`matlog`]: 2x2/3x3 matrices, Jacobi eigensolver, logarithms, polar factors
//! - [`search`]: seeded campaigns and the pinned counterexamples
//! - [`exec`]: sequential or rayon-backed execution of independent work items

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::manual_range_contains)]

pub mod error;
pub mod exec;
pub mod formulation;
pub mod lemma;
pub mod matlog;
pub mod search;
pub mod symtuple;

pub use error::{Error, Result};
pub use exec::Exec;
pub use formulation::{Formulation, HypothesisReport, Tolerance};
pub use symtuple::{LogTuple, PositiveTuple};

/// Crate version echoed in every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
