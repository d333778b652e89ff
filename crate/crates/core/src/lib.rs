//! Streaming subspace search over sliding windows.
//!
//! The crate maintains, for every dimension of a high-dimensional data
//! stream, a low-dimensional subspace in which that dimension shows strong
//! dependence, and keeps the set fresh under concept drift while spending a
//! bounded search budget per step. A bandit policy decides which dimensions
//! to re-search; a Monte-Carlo contrast score drives the greedy search.
//! Downstream, an ensemble of LOF detectors over the monitored subspaces
//! scores observations for outlierness.
//!
//! Modules:
//! - [`stream`]: observations, the sliding window and its rank indices, CSV input.
//! - [`estimator`]: the Monte-Carlo dependency estimator.
//! - [`search`]: greedy bottom-up subspace construction per dimension.
//! - [`policy`]: bandit and baseline update policies.
//! - [`engine`]: the streaming loop (initialise, monitor, update).
//! - [`outliers`]: LOF and the subspace-ensemble stream scorer.
//! - [`benchgen`]: synthetic drift benchmark generator.
//! - [`metrics`]: monitoring and ranking evaluation measures.

pub mod benchgen;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod manifest;
pub mod metrics;
pub mod outliers;
pub mod policy;
pub mod search;
pub mod seeding;
pub mod stream;

pub use error::{Error, Result};
