//! Algebra of B-series, word series and extended word series for the
//! analysis of ODE integrators.
//!
//! The crate provides, in exact rational arithmetic where the identities are
//! exact and in complex floating point where coefficients are oscillatory:
//!
//! - canonical rooted trees and forests with the pruning coproduct
//!   ([`trees`]);
//! - B-series coefficient maps, the Butcher group, Runge-Kutta elementary
//!   weights, order and symplecticness checks, and the modified-equation
//!   exp/log correspondence ([`butcher`]);
//! - exact polynomial vector fields with elementary differentials,
//!   word-basis functions, Jacobi and Poisson brackets ([`vectorfields`]);
//! - the shuffle/convolution algebra of word coefficients and
//!   iterated-integral coefficients in closed form ([`words`]);
//! - extended word series for perturbed integrable problems ([`extended`]);
//! - splitting-method coefficients, resonance detection and modified
//!   systems ([`splitting`]).

pub mod butcher;
pub mod extended;
pub mod jet;
pub mod poly;
pub mod scalar;
pub mod splitting;
pub mod trees;
pub mod vectorfields;
pub mod words;

pub use num_complex::Complex64;
pub use scalar::{parse_rat, rat, Rat, Scalar};
