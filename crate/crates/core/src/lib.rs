//! Numerical laboratory for martingale-based Bayesian posterior consistency.
//!
//! The crate evaluates posterior masses of Hellinger complements, predictive
//! densities, the martingale identities that drive their decay, and the
//! square-root prior-mass summability conditions over Hellinger covers.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod covering;
pub mod error;
pub mod experiments;
pub mod martingale;
pub mod posterior;
pub mod priors;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod summability;

pub use error::{Error, Result};
pub use scalar::Real;

/// Density on `[0, 1]` with `f64` scalars.
pub type Density = densities::SupportedDensity<f64>;
/// Density with `f32` scalars.
pub type Density32 = densities::SupportedDensity<f32>;
/// Default quadrature rule with `f64` scalars.
pub type Quadrature = densities::QuadratureRule<f64>;
/// Discrete prior with `f64` scalars.
pub type Prior = priors::DiscretePrior<f64>;
/// Discrete posterior with `f64` scalars.
pub type Posterior = posterior::DiscretePosterior<f64>;
