//! QAOA variants for MaxCut on a dense state-vector simulator.
//!
//! * [`problem`]: graphs, QUBO / Ising forms, generators, brute force.
//! * [`simulator`]: state vectors, gates, diagonal cost tables, sampling, noise.
//! * [`ansatz`]: parameterised circuits for each variant.
//! * [`objective`]: expectation, CVaR, Gibbs, approximation ratios.
//! * [`optimize`]: optimizers, gradients, initialisation, FALQON.
//! * [`meta`]: recursive QAOA and classical baselines.
//! * [`bench`]: datasets, sweeps, aggregation and output files.

pub mod ansatz;
pub mod bench;
pub mod error;
pub mod meta;
pub mod objective;
pub mod optimize;
pub mod problem;
pub mod simulator;

pub use error::{Error, Result};
