//! Composite-null multiple testing with linear-programming p-values.
//!
//! A true null observation may follow any one of `L` known distributions
//! `F_1..F_L`, mixed with unknown prior weights. This crate computes
//! p-values that are as small as the data allow while remaining valid for
//! every mixture consistent with the empirical distribution, then feeds them
//! to Benjamini–Hochberg style step-up procedures.
//!
//! The crate is `no_std` and only needs `alloc`. Modules, bottom-up:
//!
//! - [`special`]: normal CDF, regularized incomplete gamma and its inverse,
//!   noncentral t.
//! - [`model`]: null families, region transforms, the random mixture model
//!   and seeded sampling.
//! - [`empirical`]: rank counts, the `ε_n` margin and the constraint grid.
//! - [`lp`]: a small dense simplex solver, a row-generation driver for
//!   programs with thousands of rows, and a vertex-enumeration oracle.
//! - [`pvalues`]: `max`, `mix`, LP-sequential and LP-global p-values.
//! - [`bh`]: the step-up rejection rule, FDR/power metrics and the
//!   finite-sample remainder bound.
//! - [`mle`]: maximum likelihood estimation of the null prior weights.
#![no_std]
// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod linalg;
pub mod quad;

pub mod bh;
pub mod empirical;
pub mod lp;
pub mod mle;
pub mod model;
pub mod pvalues;
pub mod special;

pub use error::{Error, Result};
