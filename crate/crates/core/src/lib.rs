//! Crosstalk detection for small quantum processors.
//!
//! The pipeline has three stages. [`design`] partitions a device into 1- and
//! 2-qubit regions and generates a randomized set of parallel subcircuits,
//! [`simulator`] runs such a plan under a Markovian error model (or real
//! hardware produces the same [`dataset::Dataset`] format), and [`discovery`]
//! reconstructs the conditional-dependence skeleton over per-region settings
//! and results. Edges between variables of different regions witness
//! crosstalk; [`stats::edge_tvd`] quantifies them.

pub mod dataset;
pub mod design;
pub mod discovery;
mod error;
pub mod regions;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
