//! Random-trend diffusion model: a two-colour generalized Pólya urn whose
//! reinforcement is modulated by an i.i.d. latent trend.
//!
//! This crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation:
//!
//! * [`model`] validates parameters, classifies the regime and evaluates the
//!   one-step transition law.
//! * [`theory`] evaluates the limit quantities (replacement matrix, spectrum,
//!   limiting covariances, superdiffusive moments) in closed form and by
//!   quadrature.
//! * [`sim`] is the simulation kernel with a fixed two-uniform draw discipline
//!   and per-replicate counter-based streams.
//! * [`exact`] computes the exact law of the `A` count by dynamic programming.
//! * [`stats`] turns ensembles into scaled statistics, covariance estimates and
//!   scaling-exponent fits.
//!
//! Parallel drivers, file formats and the command line live in the `trendlab`
//! crate.

#![no_std]
// NaN-rejecting guards are written `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod special;
pub mod stats;
pub mod theory;

pub use error::{Constraint, Error, Result};
pub use linalg::{Matrix2, Vector2};
pub use model::{ModelParams, PopulationState, Regime, Trend};
