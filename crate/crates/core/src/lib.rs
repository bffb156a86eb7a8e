//! Bayesian recovery of repetitive additive spread-spectrum watermarks.
//!
//! The crate covers the whole laboratory: synthetic data generation,
//! image patch I/O, embedding and detection, two posterior solvers
//! (an exact-conditional Gibbs sampler in [`gibbs`] and a mean-field
//! variational solver in [`vb`]) and the metrics and exports in [`report`].

pub mod codec;
pub mod datagen;
pub mod error;
pub mod gibbs;
pub mod ingest;
pub mod io;
pub mod model;
pub mod report;
pub mod signal;
pub mod stats;
pub mod vb;

pub use error::{Error, Result};
