//! A desk-scale laboratory for quantum error mitigation on noisy
//! density-matrix simulations.
//!
//! The crate centers on estimating an effective global depolarization
//! fraction from randomized inverse circuits and dividing it out of noisy
//! expectation values, and compares that estimator against readout-twirled
//! calibration with zero-noise extrapolation and a CNOT-count depolarization
//! proxy. The [`harness`] module ties everything into a reproducible
//! experiment pipeline with CSV output; the `depofold` binary exposes it on
//! the command line.

pub mod analytics;
pub mod circuit;
pub mod error;
pub mod harness;
pub mod mat;
pub mod mitigation;
pub mod noise;
pub mod rng;
pub mod simulator;
pub mod twirl;

pub use error::{Error, Result};
