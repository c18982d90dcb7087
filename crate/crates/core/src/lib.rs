//! Decentralized consensus ADMM under additive node error.
//!
//! The crate covers network topologies and their spectral statistics, local
//! objectives, the noisy ADMM iteration, steady-state error bounds, and a
//! Monte Carlo harness with a command-line front end.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod format;
pub mod graph;
pub mod harness;
pub mod objectives;

pub use admm::{run, run_with_reference, NoiseModel, PenaltySchedule, RunConfig, RunTrace};
pub use bounds::{optimal_params, BoundsReport, DualOptimum};
pub use error::{Error, Result};
pub use graph::{Graph, NetworkMatrices, SpectralStats};
pub use harness::{monte_carlo, sweep, ExperimentConfig};
pub use objectives::{
    make_scaled_least_squares, ConsensusProblem, LeastSquaresSpec, LocalObjective, LocalQuadratic,
};
