//! Random mass splitting on Z and the random walk in the space-time
//! environment generated by Poisson(1) background walkers.
//!
//! * [`environment`] generates, validates and serializes environments.
//! * [`mass`] computes the mass field exactly by dynamic programming.
//! * [`rwre`] samples quenched walks, coupled pairs and their difference process.
//! * [`estimators`] aggregates replicates into the verifiable statistics.

pub mod environment;
pub mod error;
pub mod estimators;
pub mod mass;
pub mod par;
pub mod rng;
pub mod rwre;

pub use error::{Error, Result};
