//! Estimation of separating sets and generalization of randomized-experiment
//! effects to a target population.

pub mod data;
pub mod estimators;
pub mod glm;
pub mod graph;
pub mod mgm;
mod par;
pub mod pipeline;
pub mod resample;
pub mod rng;
pub mod sepset;
pub mod simulate;

pub use par::with_threads;
