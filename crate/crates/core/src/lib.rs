//! Quantum state tomography under finite statistics, with a neural
//! post-processor that maps noisy reconstructions to better estimates.
//!
//! The crate is organized bottom-up: [`linalg`] wraps dense complex matrices,
//! [`states`] generates targets, [`measurement`] simulates experiments,
//! [`estimators`] reconstructs states, [`metrics`] scores them, [`denoiser`]
//! holds the neural networks and [`pipeline`] runs end-to-end experiments.

pub mod denoiser;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{c64, ComplexMatrix};
pub use rng::SeedStream;
pub use states::DensityMatrix;
