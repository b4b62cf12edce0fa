//! Numerical toolkit for the empirical-risk landscape of small deep linear
//! and sigmoid networks: closed-form gradients and Hessians, the convergence
//! bound formulas, seeded data generation, empirical/population risk gaps,
//! and stationary-point location and pairing.

pub mod bounds;
pub mod data;
pub mod error;
pub mod exactdiff;
pub mod landscape;
pub mod model;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
