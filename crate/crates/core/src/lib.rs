//! Möbius function experiments on the binary cube.
//!
//! The crate tabulates μ and λ on `{0, …, 2^n − 1}`, computes exact
//! Fourier-Walsh spectra, evaluates exponential sums at (sparse) dyadic
//! rationals, builds the smoothed square wave that converts Walsh
//! coefficients into ordinary Fourier coefficients, and measures how
//! bounded-depth circuits correlate with μ.
//!
//! Conventions shared by every module:
//!
//! * digits are 1-based and least-significant first, `x = x_1 + 2 x_2 + …`;
//! * a subset `S ⊆ {1, …, n}` is an `n`-bit mask whose bit `i − 1` marks `i`;
//! * circuits map `true ↦ +1` and `false ↦ −1`;
//! * sums of `{−1, 0, 1}` terms are accumulated in integers.

pub mod arith;
pub mod circuits;
mod error;
pub mod expsum;
pub mod smoothing;
pub mod walsh;

pub use error::{Error, Result};
