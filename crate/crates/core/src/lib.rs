//! glx: a simulation and verification laboratory for two-dimensional
//! Ginzburg-Landau lattice fields.
//!
//! The crate samples Gibbs measures of gradient interface models on lattice
//! boxes, computes discrete harmonic averages and their multiscale increment
//! decomposition, measures extreme-value statistics of the field, and runs
//! barrier/ballot and Skorokhod-embedding experiments for the associated
//! random walks.

pub mod ballot;
pub mod config;
pub mod dst;
pub mod error;
pub mod experiments;
pub mod extremes;
pub mod harmonic;
pub mod lattice;
pub mod multiscale;
pub mod potential;
pub mod rng;
pub mod sampler;
pub mod sha256;
pub mod snapshot;
pub mod stats;

pub use error::{Error, Result};
