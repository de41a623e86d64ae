//! Respondent-driven sampling on degree-corrected stochastic blockmodels.
//!
//! Graph primitives, DC-SBM generation, tree-indexed referral sampling, the
//! classical and post-stratified estimators, population block quantities,
//! exact small-case moments, and a deterministic Monte Carlo harness.

pub mod dcsbm;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod oracle;
pub mod population;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
