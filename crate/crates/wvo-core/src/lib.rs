//! Reconstruction of Monte Carlo posteriors as weighted virtual observations.
//!
//! Given a model, its original observations, and posterior samples, this
//! crate finds a small weighted set of synthetic observations such that
//! re-conditioning the model on the weighted set reproduces the posterior.
//! It covers both flat models (per-observation weight exponents) and
//! multi-level models (weighted mixtures over virtual group parameters),
//! plus the sampling, optimization, and validation machinery around them.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod loo;
pub mod math;
pub mod model;
pub mod objective;
pub mod optimizer;
mod par;
pub mod rng;
pub mod sampler;
pub mod virtualobs;

pub use error::{Error, Result};
