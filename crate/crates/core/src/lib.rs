//! Exactly time-reversible 2D gas simulation and arrow-of-time experiments.

// Negated float comparisons here are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity, clippy::wrong_self_convention)]

pub mod config;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod output;
pub mod perturb;
pub mod rng;

pub use error::{Result, SimError};
