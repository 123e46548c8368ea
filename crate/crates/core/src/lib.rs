//! Approximation of observed finite sequences by simple stochastic processes.
//!
//! The pipeline reads a sequence, computes its run and transition
//! statistics, derives a structure partition of the states, and builds a
//! piecewise homogeneous Markov chain (or, under polyhedral constraints on
//! the transitions, a piecewise hidden Markov chain) whose realizations
//! reproduce the observed statistics. Approximation guarantees are checked by
//! exact linear algebra and by seeded simulation.

#![allow(clippy::needless_range_loop)]

pub mod approximator;
pub mod chain;
pub mod cli;
pub mod constrained;
pub mod error;
pub mod feasibility;
pub mod partition;
pub mod report;
pub mod sequence;
pub mod simulator;
pub mod subset;

pub use chain::TransitionMatrix;
pub use error::{Error, Result};
pub use partition::Partition;
pub use sequence::{Alphabet, ObservedSequence, OccupancyMeasure, TransitionCounts};
pub use subset::StateSet;
