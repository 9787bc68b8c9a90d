//! Distributed Gaussian parameter estimation over time-varying directed
//! graphs.
//!
//! Agents observe noisy samples of local means and cooperate, through a
//! sequence of directed communication graphs, to estimate the
//! precision-weighted average of those means. The crate provides the graph
//! machinery (push-sum weights, connectivity windows, mixing constants), the
//! Gaussian model, a precision-weighted push-sum estimator with two baseline
//! estimators, the `O(1/k)` error bound, and a reproducible Monte Carlo
//! harness that writes CSV output.

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod models;

pub use error::{Error, Result};
