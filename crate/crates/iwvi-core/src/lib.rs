//! Importance-weighted variational inference (IWVI) with elliptical
//! (Gaussian / Student-T) variational families.
//!
//! The crate is split into:
//! - [`rng`]: deterministic counter-based random streams,
//! - [`specfn`]: special functions and χ-distribution primitives,
//! - [`linalg`]: the small triangular-matrix kernel used everywhere,
//! - [`elliptical`]: variational families, densities, and reparameterization,
//! - [`models`]: target models with analytic gradients and exact oracles,
//! - [`iwvi`]: IW-ELBO / SNIS estimators and diagnostics,
//! - [`optim`]: fixed-noise L-BFGS and SGD drivers.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion
//! `iwvi-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod elliptical;
mod error;
mod fmath;
pub mod iwvi;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod rng;
pub mod specfn;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
