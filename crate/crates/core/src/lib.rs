//! Bayesian structure learning for discrete Bayesian networks.
//!
//! The crate computes exact posterior edge marginals by dynamic programming
//! over node orders, uses those marginals as a global Metropolis–Hastings
//! proposal for sampling DAGs under arbitrary graph priors, and provides the
//! brute-force oracles and evaluation metrics used to check both.

pub mod data;
pub mod error;
pub mod exact;
pub mod graph;
pub mod inference;
pub mod numeric;
pub mod priors;
pub mod samplers;
pub mod scoring;

pub use error::{Error, Result};
pub use graph::{AncestorMatrix, Dag, Edit, NodeSet, Order};
