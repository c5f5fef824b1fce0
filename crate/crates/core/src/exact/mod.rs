//! Exact computations: the order DP for evidence and edge marginals,
//! posterior enumeration, the MAP DAG, Chow-Liu trees and DP predictives.

mod brute;
mod chowliu;
mod dp;
mod map;
mod predictive;

pub use brute::{brute_force_posterior, BrutePosterior, BRUTE_MAX_NODES};
pub use chowliu::{chow_liu, ml_loglik, mutual_information};
pub use dp::{dp_build, dp_edge_marginals, prior_log_mass, DpTables, LocalSums, DP_MAX_NODES};
pub use map::map_dag;
pub use predictive::{dp_predictive_logprob, DpPredictor};
