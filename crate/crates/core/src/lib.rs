//! Intrinsic Diophantine approximation on integral quadrics.

pub mod cli;
pub mod config;
pub mod dimension_estimator;
pub mod error;
pub mod exact;
pub mod fractal_measures;
pub mod interval;
pub mod intrinsic_approx;
pub mod neighborhood_decay;
pub mod rational_geometry;
pub mod simplex_verifier;
pub mod stats;

pub use error::{Error, Result};
