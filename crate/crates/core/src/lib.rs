//! Stochastic FitzHugh-Nagumo traveling pulses: profile computation,
//! frozen-wave spectrum, spectral projections, noise models and the
//! phase-tracking dynamics.

// `!(x > 0.0)` is the NaN-rejecting range check; index loops mirror the
// banded storage formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod frozen;
pub mod grid;
pub mod linalg;
pub mod noise;
pub mod profile;
pub mod projection;
pub mod reaction;
pub mod stats;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testing;
